#include "ordnmf/model_io.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "ordnmf/errors.hpp"

namespace ordnmf {

namespace {

constexpr char kModelMagic[5] = "ONMF";

void write_block(std::ostream& out, const double* data, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) detail::write_f64(out, data[k]);
}

void read_block(std::istream& in, double* data, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) data[k] = detail::read_f64(in);
}

}  // namespace

void write_model(const std::filesystem::path& path, const VariationalState& state) {
  state.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const auto U = static_cast<std::uint64_t>(state.n_users());
  const auto I = static_cast<std::uint64_t>(state.n_items());
  const auto K = static_cast<std::uint64_t>(state.rank());
  detail::write_magic(out, kModelMagic);
  detail::write_le<std::uint32_t>(out, kModelFileVersion);
  detail::write_le<std::uint64_t>(out, U);
  detail::write_le<std::uint64_t>(out, I);
  detail::write_le<std::uint64_t>(out, K);
  detail::write_le<std::uint32_t>(out, state.thresholds.n_classes());
  detail::write_f64(out, state.alpha_w);
  detail::write_f64(out, state.alpha_h);
  for (double th : state.thresholds.thetas()) detail::write_f64(out, th);
  write_block(out, state.user_rate.data(), U);
  write_block(out, state.item_rate.data(), I);
  write_block(out, state.user_factors.shape().data(), U * K);
  write_block(out, state.user_factors.rate().data(), U * K);
  write_block(out, state.item_factors.shape().data(), I * K);
  write_block(out, state.item_factors.rate().data(), I * K);
  if (!out) throw DataError("write failed: " + path.string());
}

VariationalState read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  detail::expect_magic(in, kModelMagic, "model");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kModelFileVersion) throw DataError("unsupported model file version " + std::to_string(version));
  const auto U = detail::read_le<std::uint64_t>(in);
  const auto I = detail::read_le<std::uint64_t>(in);
  const auto K = detail::read_le<std::uint64_t>(in);
  const auto V = detail::read_le<std::uint32_t>(in);
  if (U > UINT32_MAX || I > UINT32_MAX || K == 0 || V == 0) throw DataError("corrupt model header");

  VariationalState state;
  state.alpha_w = detail::read_f64(in);
  state.alpha_h = detail::read_f64(in);
  std::vector<double> theta(V);
  read_block(in, theta.data(), V);
  state.thresholds = ThresholdSequence(std::move(theta));
  state.user_rate.resize(static_cast<Eigen::Index>(U));
  state.item_rate.resize(static_cast<Eigen::Index>(I));
  read_block(in, state.user_rate.data(), U);
  read_block(in, state.item_rate.data(), I);
  const auto rows_u = static_cast<Eigen::Index>(U);
  const auto rows_i = static_cast<Eigen::Index>(I);
  const auto k = static_cast<Eigen::Index>(K);
  RowMatrix w_shape(rows_u, k), w_rate(rows_u, k), h_shape(rows_i, k), h_rate(rows_i, k);
  read_block(in, w_shape.data(), U * K);
  read_block(in, w_rate.data(), U * K);
  read_block(in, h_shape.data(), I * K);
  read_block(in, h_rate.data(), I * K);
  state.user_factors = GammaVariationalMatrix(std::move(w_shape), std::move(w_rate));
  state.item_factors = GammaVariationalMatrix(std::move(h_shape), std::move(h_rate));
  state.validate();
  return state;
}

}  // namespace ordnmf
