#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "memtrade/container.hpp"
#include "memtrade/result.hpp"

namespace memtrade {

/// Append-only journal file: 4-byte magic, version byte, then length-prefixed
/// records. Opening replays the valid prefix and truncates any torn tail, so
/// a crash mid-append loses at most the record being written.
class Journal {
 public:
  Journal() = default;  // in-memory, nothing persisted

  static Result<Journal> open(const std::string& path);

  bool persistent() const { return file_ != nullptr; }
  const std::vector<Bytes>& recovered() const { return recovered_; }

  Status append(ByteView record);

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const {
      if (f) std::fclose(f);
    }
  };

  std::string path_;
  std::unique_ptr<std::FILE, FileCloser> file_;
  std::vector<Bytes> recovered_;
};

}  // namespace memtrade
