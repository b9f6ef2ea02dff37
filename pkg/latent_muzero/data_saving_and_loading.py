import hashlib
import logging
import traceback
from pathlib import Path

import polars as pl
import zstandard as zstd

from latent_muzero.custom_errors import FileCorruptionError


def get_checksum_path(file_path: Path) -> Path:
    return file_path.with_suffix(suffix=file_path.suffix + ".sha256")


def write_checksum_file(file_path: Path, checksum: str) -> Path:
    """Writes the `<hex>  <name>` sidecar next to the file and returns its path."""
    checksum_path = get_checksum_path(file_path=file_path)
    with open(file=checksum_path, mode="w") as f:
        f.write(f"{checksum}  {file_path.name}\n")
    return checksum_path


def read_file_with_checksum_verification(file_path: Path) -> bytes:
    """Reads a file once and checks its bytes against the sha256 sidecar.

    Raises:
        FileNotFoundError: If the file or its sidecar is missing.
        FileCorruptionError: If the checksums differ.
    """
    checksum_path = get_checksum_path(file_path=file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")
    if not checksum_path.exists():
        raise FileNotFoundError(f"Checksum file {checksum_path} not found.")

    with open(file=checksum_path, mode="r") as f:
        content = f.read().split()
    if not content:
        raise FileCorruptionError(file_path=checksum_path, error="The checksum file is empty")
    expected_checksum = content[0]

    with open(file=file_path, mode="rb") as f:
        file_bytes = f.read()
    actual_checksum = hashlib.sha256(file_bytes).hexdigest()
    if actual_checksum != expected_checksum:
        raise FileCorruptionError(file_path=file_path)
    return file_bytes


def save_zstd_with_checksum(payload: bytes, file_path: Path) -> None:
    """Compresses the payload with Zstandard, writes it and generates the SHA256 sidecar of the compressed bytes."""
    compressed = zstd.ZstdCompressor().compress(payload)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file=file_path, mode="wb") as f:
        f.write(compressed)
    write_checksum_file(file_path=file_path, checksum=hashlib.sha256(compressed).hexdigest())


def load_zstd_with_checksum_verification(
    file_path: Path,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> bytes:
    """Verifies the sidecar checksum and returns the decompressed payload.

    Raises:
        FileNotFoundError: If the file or its sidecar is missing.
        FileCorruptionError: On checksum mismatch or an undecodable Zstandard frame.
    """
    compressed = read_file_with_checksum_verification(file_path=file_path)
    try:
        return zstd.ZstdDecompressor().decompress(compressed)
    except zstd.ZstdError:
        error = traceback.format_exc()
        logger.error(msg=f"Could not decompress {file_path}:\n{error}")
        raise FileCorruptionError(file_path=file_path, error="The Zstandard frame could not be decoded")


def save_csv(dataframe: pl.DataFrame, file_path: str | Path) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    dataframe.write_csv(file=file_path)
    return file_path


def load_csv(file_path: str | Path) -> pl.DataFrame:
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"CSV file not found: {file_path}")
    return pl.read_csv(source=file_path)
