#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ordnmf {

using Index = std::uint32_t;
using Class = std::uint32_t;

struct Entry {
  Index user;
  Index item;
  Class cls;
};

// Sparse U x I matrix of ordinal classes in {0..V}. Class 0 is implicit.
//
// Entries are kept in compressed-sparse-row order (by user, then item). A
// column view maps every item to the CSR positions of its entries so that
// item-side passes can stream their own axis while sharing per-entry
// statistics indexed by CSR position.
class OrdinalMatrix {
 public:
  OrdinalMatrix() = default;
  // Validates (no duplicates, 1 <= cls <= V, indices in range) and sorts.
  OrdinalMatrix(Index n_users, Index n_items, Class n_classes, std::vector<Entry> entries);

  Index n_users() const { return n_users_; }
  Index n_items() const { return n_items_; }
  Class n_classes() const { return n_classes_; }
  std::size_t nnz() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  // CSR access; positions in [row_begin(u), row_end(u)).
  std::size_t row_begin(Index u) const { return row_ptr_[u]; }
  std::size_t row_end(Index u) const { return row_ptr_[u + 1]; }
  std::size_t row_nnz(Index u) const { return row_ptr_[u + 1] - row_ptr_[u]; }
  Index user(std::size_t pos) const { return users_[pos]; }
  Index item(std::size_t pos) const { return items_[pos]; }
  Class cls(std::size_t pos) const { return classes_[pos]; }

  // Column view: CSR positions of the entries of item i, ordered by user.
  std::span<const std::size_t> column(Index i) const {
    return {col_entries_.data() + col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]};
  }
  std::size_t col_nnz(Index i) const { return col_ptr_[i + 1] - col_ptr_[i]; }

  // Number of stored entries of class v, for v in 1..V.
  std::size_t class_count(Class v) const { return class_counts_.at(v - 1); }
  std::span<const std::size_t> class_counts() const { return class_counts_; }

  std::vector<Entry> entries() const;
  // Class at (u, i), 0 when absent. O(log row_nnz).
  Class at(Index u, Index i) const;

  friend bool operator==(const OrdinalMatrix&, const OrdinalMatrix&) = default;

 private:
  Index n_users_ = 0;
  Index n_items_ = 0;
  Class n_classes_ = 1;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> users_;
  std::vector<Index> items_;
  std::vector<Class> classes_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::size_t> col_entries_;
  std::vector<std::size_t> class_counts_ = std::vector<std::size_t>(1, 0);
};

// Raw positive feedback values before quantization.
struct CountEntry {
  Index user;
  Index item;
  double value;
};

struct CountTriplets {
  Index n_users = 0;
  Index n_items = 0;
  std::vector<CountEntry> entries;
};

// Internal index -> original identifier.
struct IdMap {
  std::vector<std::string> ids;

  std::size_t size() const { return ids.size(); }
  IdMap subset(std::span<const Index> kept) const;
};

struct TripletFormat {
  // ' ' splits on any run of blanks/tabs.
  char delimiter = '\t';
  bool skip_header = false;
};

struct LoadedTriplets {
  CountTriplets counts;
  IdMap users;
  IdMap items;
};

// Reads (user id, item id, value) rows. Ids are mapped to contiguous indices
// in order of first appearance. Blank lines and lines starting with '#' are
// skipped.
LoadedTriplets load_triplets(const std::filesystem::path& path, const TripletFormat& format = {});

// Count c maps to the smallest v with c <= q_v. With an open top class, counts
// above q_V form class V+1; otherwise they are rejected.
struct QuantizationScheme {
  std::vector<double> boundaries;
  bool open_top = true;

  void validate() const;
  Class n_classes() const;
  Class classify(double count) const;
};

OrdinalMatrix quantize_counts(const CountTriplets& counts, const QuantizationScheme& scheme);

struct FilterResult {
  OrdinalMatrix matrix;
  std::vector<Index> kept_users;  // new index -> old index
  std::vector<Index> kept_items;
};

// Keeps users with at least min_user_nnz entries and items with at least
// min_item_nnz entries. With fixed_point, repeats until both constraints hold
// simultaneously; otherwise a single simultaneous pass.
FilterResult filter_activity(const OrdinalMatrix& matrix, std::size_t min_user_nnz,
                             std::size_t min_item_nnz, bool fixed_point = true);

// Uniform random global split of the stored entries. Test size is
// floor(test_fraction * nnz), at least 1; requires nnz >= 2.
std::pair<OrdinalMatrix, OrdinalMatrix> train_test_split(const OrdinalMatrix& matrix,
                                                         double test_fraction,
                                                         std::uint64_t seed);

// Binary matrix file: "ORDM", u32 version, u64 users, u64 items, u32 V,
// u64 nnz, then nnz x (u32 user, u32 item, u32 class). Little-endian.
inline constexpr std::uint32_t kMatrixFileVersion = 1;
void write_matrix(const std::filesystem::path& path, const OrdinalMatrix& matrix);
OrdinalMatrix read_matrix(const std::filesystem::path& path);

// Sidecar text file: one "index<TAB>id" line per entry.
void write_id_map(const std::filesystem::path& path, const IdMap& map);
IdMap read_id_map(const std::filesystem::path& path);

}  // namespace ordnmf
