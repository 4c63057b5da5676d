#include "ordnmf/ordinal_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "ordnmf/errors.hpp"

namespace ordnmf {

OrdinalMatrix::OrdinalMatrix(Index n_users, Index n_items, Class n_classes, std::vector<Entry> entries)
    : n_users_(n_users), n_items_(n_items), n_classes_(n_classes) {
  if (n_classes < 1) throw DataError("number of classes must be at least 1");
  for (const auto& e : entries) {
    if (e.user >= n_users || e.item >= n_items) {
      throw DataError("entry (" + std::to_string(e.user) + ", " + std::to_string(e.item) +
                      ") outside a " + std::to_string(n_users) + "x" + std::to_string(n_items) +
                      " matrix");
    }
    if (e.cls < 1 || e.cls > n_classes) {
      throw DataError("class " + std::to_string(e.cls) + " at (" + std::to_string(e.user) + ", " +
                      std::to_string(e.item) + ") outside 1.." + std::to_string(n_classes));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].user == entries[k - 1].user && entries[k].item == entries[k - 1].item) {
      throw DataError("duplicate entry (" + std::to_string(entries[k].user) + ", " +
                      std::to_string(entries[k].item) + ")");
    }
  }

  const std::size_t nnz = entries.size();
  row_ptr_.assign(std::size_t{n_users} + 1, 0);
  users_.resize(nnz);
  items_.resize(nnz);
  classes_.resize(nnz);
  class_counts_.assign(n_classes, 0);
  col_ptr_.assign(std::size_t{n_items} + 1, 0);
  for (std::size_t k = 0; k < nnz; ++k) {
    users_[k] = entries[k].user;
    items_[k] = entries[k].item;
    classes_[k] = entries[k].cls;
    ++row_ptr_[entries[k].user + 1];
    ++col_ptr_[entries[k].item + 1];
    ++class_counts_[entries[k].cls - 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());

  // Stable fill keeps each column sorted by user.
  col_entries_.resize(nnz);
  std::vector<std::size_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
  for (std::size_t k = 0; k < nnz; ++k) col_entries_[cursor[items_[k]]++] = k;
}

std::vector<Entry> OrdinalMatrix::entries() const {
  std::vector<Entry> out(nnz());
  for (std::size_t k = 0; k < nnz(); ++k) out[k] = {users_[k], items_[k], classes_[k]};
  return out;
}

Class OrdinalMatrix::at(Index u, Index i) const {
  if (u >= n_users_ || i >= n_items_) throw LookupError("cell outside matrix");
  const auto first = items_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[u]);
  const auto last = items_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[u + 1]);
  const auto it = std::lower_bound(first, last, i);
  if (it == last || *it != i) return 0;
  return classes_[static_cast<std::size_t>(it - items_.begin())];
}

IdMap IdMap::subset(std::span<const Index> kept) const {
  IdMap out;
  out.ids.reserve(kept.size());
  for (Index k : kept) out.ids.push_back(ids.at(k));
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  if (delimiter == ' ') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      fields.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return fields;
  }
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(delimiter, pos);
    fields.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Index intern(std::unordered_map<std::string, Index>& lookup, IdMap& map, std::string_view id) {
  auto [it, inserted] = lookup.try_emplace(std::string(id), static_cast<Index>(map.ids.size()));
  if (inserted) map.ids.emplace_back(id);
  return it->second;
}

}  // namespace

LoadedTriplets load_triplets(const std::filesystem::path& path, const TripletFormat& format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  LoadedTriplets out;
  std::unordered_map<std::string, Index> user_lookup;
  std::unordered_map<std::string, Index> item_lookup;
  std::unordered_map<std::uint64_t, std::size_t> seen;  // (user, item) -> line
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = format.skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split_fields(view, format.delimiter);
    if (fields.size() != 3) {
      throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), line_no);
    }
    const std::string_view user_id = trim(fields[0]);
    const std::string_view item_id = trim(fields[1]);
    const std::string_view value_text = trim(fields[2]);
    if (user_id.empty() || item_id.empty()) throw ParseError("empty identifier", line_no);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc{} || ptr != value_text.data() + value_text.size() || !std::isfinite(value)) {
      throw ParseError("cannot parse value '" + std::string(value_text) + "'", line_no);
    }
    if (value <= 0.0) {
      throw DataError("line " + std::to_string(line_no) + ": non-positive value " + std::string(value_text));
    }
    const Index u = intern(user_lookup, out.users, user_id);
    const Index i = intern(item_lookup, out.items, item_id);
    const std::uint64_t key = (std::uint64_t{u} << 32) | i;
    if (auto [it, inserted] = seen.try_emplace(key, line_no); !inserted) {
      throw DataError("duplicate pair (" + std::string(user_id) + ", " + std::string(item_id) +
                      ") on lines " + std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    out.counts.entries.push_back({u, i, value});
  }
  out.counts.n_users = static_cast<Index>(out.users.size());
  out.counts.n_items = static_cast<Index>(out.items.size());
  return out;
}

void QuantizationScheme::validate() const {
  if (boundaries.empty()) throw ConfigError("quantization scheme needs at least one boundary");
  for (std::size_t v = 0; v < boundaries.size(); ++v) {
    if (!(boundaries[v] > 0.0)) throw ConfigError("quantization boundaries must be positive");
    if (v > 0 && !(boundaries[v] > boundaries[v - 1])) {
      throw ConfigError("quantization boundaries must be strictly increasing");
    }
  }
}

Class QuantizationScheme::n_classes() const {
  return static_cast<Class>(boundaries.size() + (open_top ? 1 : 0));
}

Class QuantizationScheme::classify(double count) const {
  if (!(count > 0.0)) throw DataError("count must be positive, got " + std::to_string(count));
  const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), count);
  if (it == boundaries.end() && !open_top) {
    throw DataError("count " + std::to_string(count) + " above the last boundary");
  }
  return static_cast<Class>(it - boundaries.begin()) + 1;
}

OrdinalMatrix quantize_counts(const CountTriplets& counts, const QuantizationScheme& scheme) {
  scheme.validate();
  std::vector<Entry> entries;
  entries.reserve(counts.entries.size());
  for (const auto& c : counts.entries) entries.push_back({c.user, c.item, scheme.classify(c.value)});
  return OrdinalMatrix(counts.n_users, counts.n_items, scheme.n_classes(), std::move(entries));
}

FilterResult filter_activity(const OrdinalMatrix& matrix, std::size_t min_user_nnz,
                             std::size_t min_item_nnz, bool fixed_point) {
  std::vector<char> user_alive(matrix.n_users(), 1);
  std::vector<char> item_alive(matrix.n_items(), 1);
  const auto all = matrix.entries();

  while (true) {
    std::vector<std::size_t> user_deg(matrix.n_users(), 0);
    std::vector<std::size_t> item_deg(matrix.n_items(), 0);
    for (const auto& e : all) {
      if (user_alive[e.user] && item_alive[e.item]) {
        ++user_deg[e.user];
        ++item_deg[e.item];
      }
    }
    bool changed = false;
    for (Index u = 0; u < matrix.n_users(); ++u) {
      if (user_alive[u] && user_deg[u] < min_user_nnz) {
        user_alive[u] = 0;
        changed = true;
      }
    }
    for (Index i = 0; i < matrix.n_items(); ++i) {
      if (item_alive[i] && item_deg[i] < min_item_nnz) {
        item_alive[i] = 0;
        changed = true;
      }
    }
    if (!changed || !fixed_point) break;
  }

  FilterResult out;
  std::vector<Index> user_new(matrix.n_users(), 0);
  std::vector<Index> item_new(matrix.n_items(), 0);
  for (Index u = 0; u < matrix.n_users(); ++u) {
    if (user_alive[u]) {
      user_new[u] = static_cast<Index>(out.kept_users.size());
      out.kept_users.push_back(u);
    }
  }
  for (Index i = 0; i < matrix.n_items(); ++i) {
    if (item_alive[i]) {
      item_new[i] = static_cast<Index>(out.kept_items.size());
      out.kept_items.push_back(i);
    }
  }
  std::vector<Entry> kept;
  for (const auto& e : all) {
    if (user_alive[e.user] && item_alive[e.item]) kept.push_back({user_new[e.user], item_new[e.item], e.cls});
  }
  out.matrix = OrdinalMatrix(static_cast<Index>(out.kept_users.size()),
                             static_cast<Index>(out.kept_items.size()), matrix.n_classes(), std::move(kept));
  return out;
}

std::pair<OrdinalMatrix, OrdinalMatrix> train_test_split(const OrdinalMatrix& matrix, double test_fraction,
                                                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  const std::size_t nnz = matrix.nnz();
  if (nnz < 2) throw DataError("cannot split fewer than 2 entries");
  const std::size_t n_test =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(nnz))));

  std::vector<std::size_t> order(nnz);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto all = matrix.entries();
  std::vector<Entry> test;
  std::vector<Entry> train;
  test.reserve(n_test);
  train.reserve(nnz - n_test);
  for (std::size_t k = 0; k < nnz; ++k) (k < n_test ? test : train).push_back(all[order[k]]);
  return {OrdinalMatrix(matrix.n_users(), matrix.n_items(), matrix.n_classes(), std::move(train)),
          OrdinalMatrix(matrix.n_users(), matrix.n_items(), matrix.n_classes(), std::move(test))};
}

namespace {
constexpr char kMatrixMagic[5] = "ORDM";
}

void write_matrix(const std::filesystem::path& path, const OrdinalMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  detail::write_magic(out, kMatrixMagic);
  detail::write_le<std::uint32_t>(out, kMatrixFileVersion);
  detail::write_le<std::uint64_t>(out, matrix.n_users());
  detail::write_le<std::uint64_t>(out, matrix.n_items());
  detail::write_le<std::uint32_t>(out, matrix.n_classes());
  detail::write_le<std::uint64_t>(out, matrix.nnz());
  for (std::size_t k = 0; k < matrix.nnz(); ++k) {
    detail::write_le<std::uint32_t>(out, matrix.user(k));
    detail::write_le<std::uint32_t>(out, matrix.item(k));
    detail::write_le<std::uint32_t>(out, matrix.cls(k));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

OrdinalMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  detail::expect_magic(in, kMatrixMagic, "ordinal matrix");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kMatrixFileVersion) {
    throw DataError("unsupported matrix file version " + std::to_string(version));
  }
  const auto n_users = detail::read_le<std::uint64_t>(in);
  const auto n_items = detail::read_le<std::uint64_t>(in);
  const auto n_classes = detail::read_le<std::uint32_t>(in);
  const auto nnz = detail::read_le<std::uint64_t>(in);
  if (n_users > UINT32_MAX || n_items > UINT32_MAX) throw DataError("matrix dimensions too large");
  std::vector<Entry> entries(nnz);
  for (auto& e : entries) {
    e.user = detail::read_le<std::uint32_t>(in);
    e.item = detail::read_le<std::uint32_t>(in);
    e.cls = detail::read_le<std::uint32_t>(in);
  }
  return OrdinalMatrix(static_cast<Index>(n_users), static_cast<Index>(n_items), n_classes, std::move(entries));
}

void write_id_map(const std::filesystem::path& path, const IdMap& map) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t k = 0; k < map.ids.size(); ++k) out << k << '\t' << map.ids[k] << '\n';
}

IdMap read_id_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  IdMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected index<TAB>id", line_no);
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, index);
    if (ec != std::errc{} || ptr != line.data() + tab || index != map.ids.size()) {
      throw ParseError("index out of sequence", line_no);
    }
    map.ids.push_back(line.substr(tab + 1));
  }
  return map;
}

}  // namespace ordnmf
