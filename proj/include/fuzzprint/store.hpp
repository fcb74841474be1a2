#pragma once

// On-disk fingerprint collection: <root>/<kind>/<slug>.fp. The header inside
// each file is authoritative for label, kind and corpus checksum; the file
// name is only a filesystem-safe slug of the label.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fuzzprint/error.hpp"
#include "fuzzprint/fingerprint.hpp"

namespace fuzzprint {

inline std::string label_slug(std::string_view label) {
  std::string slug;
  for (char c : label) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_') {
      slug += static_cast<char>(std::tolower(u));
    } else if (c == '.') {
      if (!slug.empty() && slug.back() != '-' && slug.back() != '.') slug += '.';
    } else if (!slug.empty() && slug.back() != '-') {
      if (slug.back() == '.') slug.pop_back();
      slug += '-';
    }
  }
  while (!slug.empty() && (slug.back() == '-' || slug.back() == '.')) slug.pop_back();
  return slug.empty() ? "fp" : slug;
}

class Collection {
 public:
  struct Entry {
    std::string label;
    Kind kind;
    std::string corpus_checksum;
    std::filesystem::path file;
  };

  explicit Collection(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    for (auto k : {Kind::os, Kind::ftp}) {
      std::filesystem::create_directories(root_ / std::string(kind_name(k)), ec);
      if (ec) throw IoError("cannot create " + (root_ / std::string(kind_name(k))).string() + ": " + ec.message());
    }
  }

  Collection(const Collection&) = delete;
  Collection& operator=(const Collection&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Entries of one kind, sorted by label.
  std::vector<Entry> list(Kind kind) const { return scan(kind).entries; }

  bool contains(std::string_view label, Kind kind) const {
    const auto entries = list(kind);
    return std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.label == label; });
  }

  /// Writes a new fingerprint file; never touches existing files.
  std::filesystem::path save(const Fingerprint& fp) {
    validate_label(fp.label);
    validate_records(fp);
    if (!is_hex64(fp.corpus_checksum)) throw DomainError("fingerprint has malformed corpus checksum");

    std::lock_guard guard(mutex_);
    FileLock lock(root_ / ".lock");
    const auto index = scan(fp.kind);
    for (const auto& e : index.entries)
      if (e.label == fp.label)
        throw ConflictError(std::string(kind_name(fp.kind)) + " fingerprint '" + fp.label + "' already exists in " +
                            e.file.string());

    const auto dir = root_ / std::string(kind_name(fp.kind));
    const std::string slug = label_slug(fp.label);
    const std::string text = format_fingerprint(fp);
    // write a temp file completely, then hard-link it into place: link()
    // never replaces an existing name, and readers never see a partial file
    const auto tmp = dir / (".tmp-" + std::to_string(::getpid()) + "-" + slug);
    write_new_file(tmp, text);
    for (int n = 1;; ++n) {
      const auto path = dir / (n == 1 ? slug + ".fp" : slug + "-" + std::to_string(n) + ".fp");
      if (::link(tmp.c_str(), path.c_str()) == 0) {
        ::unlink(tmp.c_str());
        return path;
      }
      if (errno == EEXIST) continue;
      const std::string msg = std::strerror(errno);
      ::unlink(tmp.c_str());
      throw IoError("cannot create " + path.string() + ": " + msg);
    }
  }

  Fingerprint load(std::string_view label, Kind kind) const {
    const auto index = scan(kind);
    for (const auto& e : index.entries)
      if (e.label == label) return load_fingerprint_file(e.file.string());
    const auto slug_path = root_ / std::string(kind_name(kind)) / (label_slug(label) + ".fp");
    if (std::find(index.corrupt.begin(), index.corrupt.end(), slug_path) != index.corrupt.end())
      throw IntegrityError(slug_path.string() + " is corrupt: " + describe_corruption(slug_path));
    throw NotFoundError(std::string(kind_name(kind)) + " fingerprint '" + std::string(label) + "' not found");
  }

  /// All fingerprints of one kind, in label order. Any corrupt file fails
  /// the whole load.
  std::vector<Fingerprint> load_all(Kind kind) const {
    const auto index = scan(kind);
    if (!index.corrupt.empty())
      throw IntegrityError(index.corrupt.front().string() + " is corrupt: " + describe_corruption(index.corrupt.front()));
    std::vector<Fingerprint> out;
    out.reserve(index.entries.size());
    for (const auto& e : index.entries) out.push_back(load_fingerprint_file(e.file.string()));
    return out;
  }

 private:
  static std::string describe_corruption(const std::filesystem::path& p) {
    try {
      (void)load_fingerprint_file(p.string());
    } catch (const Error& e) {
      return e.what();
    }
    return "fingerprint of another kind";
  }

  static void write_new_file(const std::filesystem::path& path, const std::string& text) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw IoError("cannot create " + path.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < text.size()) {
      const auto r = ::write(fd, text.data() + written, text.size() - written);
      if (r < 0) {
        if (errno == EINTR) continue;
        const std::string msg = std::strerror(errno);
        ::close(fd);
        ::unlink(path.c_str());
        throw IoError("write failed for " + path.string() + ": " + msg);
      }
      written += static_cast<std::size_t>(r);
    }
    if (::close(fd) != 0) {
      ::unlink(path.c_str());
      throw IoError("close failed for " + path.string());
    }
  }

  struct Index {
    std::vector<Entry> entries;
    std::vector<std::filesystem::path> corrupt;
  };

  class FileLock {
   public:
    explicit FileLock(const std::filesystem::path& p) : fd_(::open(p.c_str(), O_RDWR | O_CREAT, 0644)) {
      if (fd_ < 0) throw IoError("cannot open lock file " + p.string());
      while (::flock(fd_, LOCK_EX) != 0 && errno == EINTR) {
      }
    }
    ~FileLock() {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

   private:
    int fd_;
  };

  Index scan(Kind kind) const {
    Index idx;
    const auto dir = root_ / std::string(kind_name(kind));
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) return idx;
    std::vector<std::filesystem::path> files;
    for (const auto& de : std::filesystem::directory_iterator(dir))
      if (de.is_regular_file() && de.path().extension() == ".fp") files.push_back(de.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        const auto fp = load_fingerprint_file(f.string());
        if (fp.kind != kind) throw IntegrityError("kind mismatch");
        idx.entries.push_back({fp.label, fp.kind, fp.corpus_checksum, f});
      } catch (const Error&) {
        idx.corrupt.push_back(f);
      }
    }
    std::stable_sort(idx.entries.begin(), idx.entries.end(),
                     [](const Entry& a, const Entry& b) { return a.label < b.label; });
    return idx;
  }

  std::filesystem::path root_;
  std::mutex mutex_;
};

}  // namespace fuzzprint
