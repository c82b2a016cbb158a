#include "memtrade/journal.hpp"

#include <sys/stat.h>

#include <cstring>
#include <filesystem>

namespace memtrade {

namespace {

bool read_exact(std::FILE* f, uint8_t* out, size_t n) {
  return std::fread(out, 1, n, f) == n;
}

}  // namespace

Result<Journal> Journal::open(const std::string& path) {
  using R = Result<Journal>;
  Journal journal;
  journal.path_ = path;

  bool exists = std::filesystem::exists(path);
  if (!exists) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) return R::failure("cannot create journal at " + path);
    uint8_t header[5] = {kJournalMagic[0], kJournalMagic[1], kJournalMagic[2], kJournalMagic[3],
                         kContainerVersion};
    if (std::fwrite(header, 1, sizeof(header), f) != sizeof(header)) {
      std::fclose(f);
      return R::failure("cannot write journal header");
    }
    std::fflush(f);
    journal.file_.reset(f);
    return journal;
  }

  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return R::failure("cannot open journal at " + path);
  uint8_t header[5];
  if (!read_exact(f, header, sizeof(header)) ||
      std::memcmp(header, kJournalMagic.data(), 4) != 0 || header[4] != kContainerVersion) {
    std::fclose(f);
    return R::failure("journal header mismatch");
  }

  // Replay stops at the first incomplete record; the tail is torn write debris.
  long valid_end = 5;
  while (true) {
    uint8_t lenbuf[4];
    if (!read_exact(f, lenbuf, 4)) break;
    uint32_t len = (uint32_t(lenbuf[0]) << 24) | (uint32_t(lenbuf[1]) << 16) |
                   (uint32_t(lenbuf[2]) << 8) | uint32_t(lenbuf[3]);
    Bytes record(len);
    if (len > 0 && !read_exact(f, record.data(), len)) break;
    journal.recovered_.push_back(std::move(record));
    valid_end += 4 + static_cast<long>(len);
  }
  std::fclose(f);

  std::error_code ec;
  if (std::filesystem::file_size(path, ec) != static_cast<uintmax_t>(valid_end) && !ec) {
    std::filesystem::resize_file(path, static_cast<uintmax_t>(valid_end), ec);
    if (ec) return R::failure("cannot truncate torn journal tail");
  }

  std::FILE* out = std::fopen(path.c_str(), "ab");
  if (!out) return R::failure("cannot reopen journal for append");
  journal.file_.reset(out);
  return journal;
}

Status Journal::append(ByteView record) {
  if (!file_) return Status();  // in-memory mode
  uint8_t lenbuf[4] = {
      static_cast<uint8_t>((record.size() >> 24) & 0xFF),
      static_cast<uint8_t>((record.size() >> 16) & 0xFF),
      static_cast<uint8_t>((record.size() >> 8) & 0xFF),
      static_cast<uint8_t>(record.size() & 0xFF),
  };
  if (std::fwrite(lenbuf, 1, 4, file_.get()) != 4 ||
      (record.size() > 0 &&
       std::fwrite(record.data(), 1, record.size(), file_.get()) != record.size())) {
    return Status::failure("journal append failed");
  }
  std::fflush(file_.get());
  return Status();
}

}  // namespace memtrade
