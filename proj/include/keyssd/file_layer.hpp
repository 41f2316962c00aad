#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "keyssd/page_cache.hpp"
#include "keyssd/types.hpp"

namespace keyssd {

/// A contiguous run of file pages backed by a contiguous run of host pages.
struct Extent {
  std::uint64_t file_page = 0;
  Lba lba = 0;
  std::uint64_t pages = 0;
};

struct Inode {
  InodeId id = 0;
  std::string path;
  std::uint64_t size = 0;
  std::vector<Extent> extents;  // ordered by file_page, non-overlapping

  std::uint64_t allocated_pages() const;
};

/// Flat-namespace file layer with a first-fit contiguous-extent allocator.
/// Addresses are LBAs (512-byte sectors), always host-page aligned.
class FileLayer {
 public:
  /// Allocates from host pages [first_page, end_page).
  FileLayer(std::uint64_t first_page, std::uint64_t end_page, std::uint64_t sectors_per_page);

  /// Throws AlreadyExists. With `pinned_lba`, the file's first page will be
  /// placed at that address (which must be free).
  InodeId create(const std::string& path, std::optional<Lba> pinned_lba = std::nullopt);
  std::optional<InodeId> lookup(const std::string& path) const;
  const Inode& inode(InodeId id) const;
  bool exists(InodeId id) const { return inodes_.contains(id); }

  void set_size(InodeId id, std::uint64_t size);
  /// Grows the allocation to at least `pages` file pages. Throws NoSpace.
  void ensure_allocated(InodeId id, std::uint64_t pages);
  Lba lba_of(InodeId id, std::uint64_t file_page) const;

  /// Frees the extents and forgets the inode.
  void release(InodeId id);

  std::optional<InodeId> owner_of(Lba lba) const;
  std::vector<Lba> address_space(InodeId id) const;

  std::size_t file_count() const { return inodes_.size(); }
  std::uint64_t free_pages() const;
  std::vector<std::string> paths() const;

 private:
  std::optional<std::uint64_t> take_at(std::uint64_t page, std::uint64_t want);
  std::pair<std::uint64_t, std::uint64_t> take_first_fit(std::uint64_t want);
  void give_back(std::uint64_t page, std::uint64_t count);
  Inode& mutable_inode(InodeId id);

  std::uint64_t sectors_per_page_;
  std::map<std::uint64_t, std::uint64_t> free_;      // start page -> length
  std::map<std::uint64_t, std::pair<InodeId, std::uint64_t>> owners_;  // start page -> (inode, length)
  std::unordered_map<InodeId, Inode> inodes_;
  std::unordered_map<std::string, InodeId> names_;
  std::unordered_map<InodeId, std::uint64_t> pinned_;  // inode -> first page, until allocated
  InodeId next_id_ = 1;
};

}  // namespace keyssd
