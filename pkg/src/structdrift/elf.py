"""Minimal ELF reader: just enough to locate and load debug sections.

Handles 32- and 64-bit files of either endianness and decompresses
zlib-compressed debug sections (both SHF_COMPRESSED and legacy .zdebug_*).
"""

import struct
import zlib
from dataclasses import dataclass
from typing import Dict, Optional

from .errors import NotElfError

ELF_MAGIC = b"\x7fELF"

SHF_COMPRESSED = 0x800
ELFCOMPRESS_ZLIB = 1

# e_machine values for the architectures this toolkit profiles.
EM_386 = 3
EM_ARM = 40
EM_X86_64 = 62
EM_AARCH64 = 183

MACHINE_LABELS = {
    (EM_ARM, 32): "arm32",
    (EM_AARCH64, 64): "arm64",
    (EM_386, 32): "x86_32",
    (EM_X86_64, 64): "x86_64",
}


@dataclass
class Section:
    name: str
    sh_type: int
    flags: int
    offset: int
    size: int


class ElfFile:
    """Parsed ELF container giving access to raw section contents."""

    def __init__(self, data: bytes):
        self.data = data
        if len(data) < 16 or data[:4] != ELF_MAGIC:
            raise NotElfError("bad ELF magic")
        ei_class = data[4]
        ei_data = data[5]
        if ei_class not in (1, 2):
            raise NotElfError(f"unsupported ELF class {ei_class}")
        if ei_data not in (1, 2):
            raise NotElfError(f"unsupported ELF data encoding {ei_data}")
        self.bits = 32 if ei_class == 1 else 64
        self.little_endian = ei_data == 1
        self._end = "<" if self.little_endian else ">"
        try:
            self._parse_headers()
        except struct.error as exc:
            raise NotElfError(f"truncated ELF header: {exc}") from exc

    def _parse_headers(self) -> None:
        e = self._end
        if self.bits == 64:
            (self.machine,) = struct.unpack_from(e + "H", self.data, 18)
            (shoff,) = struct.unpack_from(e + "Q", self.data, 0x28)
            shentsize, shnum, shstrndx = struct.unpack_from(e + "HHH", self.data, 0x3A)
        else:
            (self.machine,) = struct.unpack_from(e + "H", self.data, 18)
            (shoff,) = struct.unpack_from(e + "I", self.data, 0x20)
            shentsize, shnum, shstrndx = struct.unpack_from(e + "HHH", self.data, 0x2E)
        if shoff == 0 or shentsize == 0:
            raise NotElfError("ELF file has no section header table")

        headers = []
        # shnum == 0 means the real count lives in section 0's sh_size.
        count = shnum if shnum else self._section_field(shoff, shentsize, 0, "size")
        if shoff + count * shentsize > len(self.data):
            raise NotElfError("section header table extends past end of file")
        for i in range(count):
            base = shoff + i * shentsize
            if self.bits == 64:
                name_off, sh_type, flags, _addr, offset, size = struct.unpack_from(
                    e + "IIQQQQ", self.data, base
                )
            else:
                name_off, sh_type, flags, _addr, offset, size = struct.unpack_from(
                    e + "IIIIII", self.data, base
                )
            headers.append((name_off, sh_type, flags, offset, size))

        if shstrndx == 0xFFFF:
            shstrndx = self._section_field(shoff, shentsize, 0, "link")
        if shstrndx >= len(headers):
            raise NotElfError("section name string table index out of range")
        _, _, _, str_off, str_size = headers[shstrndx]
        strtab = self.data[str_off : str_off + str_size]

        self.sections: Dict[str, Section] = {}
        for name_off, sh_type, flags, offset, size in headers:
            end = strtab.find(b"\x00", name_off)
            if end < 0:
                continue
            name = strtab[name_off:end].decode("utf-8", "replace")
            self.sections[name] = Section(name, sh_type, flags, offset, size)

    def _section_field(self, shoff: int, shentsize: int, index: int, field: str) -> int:
        e = self._end
        base = shoff + index * shentsize
        if self.bits == 64:
            layout = {"size": (e + "Q", base + 0x20), "link": (e + "I", base + 0x28)}
        else:
            layout = {"size": (e + "I", base + 0x14), "link": (e + "I", base + 0x18)}
        fmt, pos = layout[field]
        return struct.unpack_from(fmt, self.data, pos)[0]

    def section_bytes(self, section: Section) -> bytes:
        raw = self.data[section.offset : section.offset + section.size]
        if len(raw) != section.size:
            raise NotElfError(f"section {section.name} extends past end of file")
        if section.flags & SHF_COMPRESSED:
            return self._decompress_chdr(section.name, raw)
        if section.name.startswith(".zdebug"):
            return self._decompress_legacy(section.name, raw)
        return raw

    def _decompress_chdr(self, name: str, raw: bytes) -> bytes:
        e = self._end
        if self.bits == 64:
            ch_type, _reserved, _size, _align = struct.unpack_from(e + "IIQQ", raw, 0)
            payload = raw[24:]
        else:
            ch_type, _size, _align = struct.unpack_from(e + "III", raw, 0)
            payload = raw[12:]
        if ch_type != ELFCOMPRESS_ZLIB:
            raise NotElfError(f"section {name} uses unsupported compression {ch_type}")
        return zlib.decompress(payload)

    @staticmethod
    def _decompress_legacy(name: str, raw: bytes) -> bytes:
        if raw[:4] != b"ZLIB":
            raise NotElfError(f"section {name} lacks ZLIB header")
        return zlib.decompress(raw[12:])

    def debug_section(self, suffix: str) -> Optional[bytes]:
        """Return decompressed contents of .debug_<suffix> (or .zdebug_<suffix>)."""
        for name in (f".debug_{suffix}", f".zdebug_{suffix}"):
            section = self.sections.get(name)
            if section is not None:
                return self.section_bytes(section)
        return None

    def architecture_label(self) -> Optional[str]:
        return MACHINE_LABELS.get((self.machine, self.bits))


def load_elf(path) -> ElfFile:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except IsADirectoryError as exc:
        raise NotElfError(f"{path} is a directory") from exc
    return ElfFile(data)
