#include "phaseflow/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace phaseflow::io {

namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic = {'P', 'F', 'G', 'R', 'I', 'D', '1', '\n'};

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

void write_container(const std::filesystem::path& path, const json& header, const std::vector<double>& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string text = header.dump();
  const std::uint64_t len = text.size();
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::pair<json, std::vector<double>> read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error(path.string() + " is not a phaseflow snapshot");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated snapshot header: " + path.string());
  json header = json::parse(text);
  const auto count = header.at("count").get<std::uint64_t>();
  std::vector<double> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("truncated snapshot payload: " + path.string());
  return {std::move(header), std::move(payload)};
}

json axis_json(const GridAxis& a) { return {{"n", a.n}, {"min", a.min}, {"step", a.step}}; }

GridAxis axis_from(const json& j) { return {j.at("n").get<int>(), j.at("min").get<double>(), j.at("step").get<double>()}; }

}  // namespace

void write_wavefunction(const std::filesystem::path& path, const WavefunctionGrid& w) {
  std::vector<double> payload;
  payload.reserve(2 * w.psi.size());
  for (const auto& a : w.psi) {
    payload.push_back(a.real());
    payload.push_back(a.imag());
  }
  const json header = {{"format", "phaseflow-grid"}, {"version", 1},          {"kind", "wavefunction"},
                       {"dtype", "complex128"},      {"x", axis_json(w.x)},  {"hbar", w.hbar},
                       {"mass", w.mass},             {"count", payload.size()}};
  write_container(path, header, payload);
}

WavefunctionGrid read_wavefunction(const std::filesystem::path& path) {
  auto [header, payload] = read_container(path);
  if (header.at("kind") != "wavefunction") throw std::runtime_error(path.string() + " is not a wavefunction snapshot");
  WavefunctionGrid w;
  w.x = axis_from(header.at("x"));
  w.hbar = header.at("hbar").get<double>();
  w.mass = header.at("mass").get<double>();
  if (payload.size() != 2 * static_cast<std::size_t>(w.x.n)) throw std::runtime_error("wavefunction payload size mismatch");
  w.psi.resize(static_cast<std::size_t>(w.x.n));
  for (std::size_t j = 0; j < w.psi.size(); ++j) w.psi[j] = {payload[2 * j], payload[2 * j + 1]};
  return w;
}

void write_phase_grid(const std::filesystem::path& path, const PhaseSpaceGrid& g, std::optional<double> hbar) {
  json header = {{"format", "phaseflow-grid"}, {"version", 1},         {"kind", hbar ? "wigner" : "phase_space"},
                 {"dtype", "float64"},         {"x", axis_json(g.x)}, {"p", axis_json(g.p)},
                 {"count", g.f.size()}};
  if (hbar) header["hbar"] = *hbar;
  write_container(path, header, g.f);
}

PhaseGridSnapshot read_phase_grid(const std::filesystem::path& path) {
  auto [header, payload] = read_container(path);
  const auto kind = header.at("kind").get<std::string>();
  if (kind != "wigner" && kind != "phase_space") throw std::runtime_error(path.string() + " is not a phase-space snapshot");
  PhaseGridSnapshot s;
  s.grid.x = axis_from(header.at("x"));
  s.grid.p = axis_from(header.at("p"));
  if (payload.size() != static_cast<std::size_t>(s.grid.x.n) * s.grid.p.n)
    throw std::runtime_error("phase grid payload size mismatch");
  s.grid.f = std::move(payload);
  if (kind == "wigner") s.hbar = header.at("hbar").get<double>();
  return s;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), ptr);
}

MomentCsv::MomentCsv(const std::filesystem::path& path, bool with_closure)
    : out_(path), with_closure_(with_closure) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_ << "t,n,k,value,flavor" << (with_closure_ ? ",closure" : "") << '\n';
}

void MomentCsv::write(double t, const MomentSet& m, std::string_view closure) {
  const std::string ts = format_double(t);
  for (int s = 1; s <= m.order(); ++s)
    for (int k = 0; k <= s; ++k) {
      out_ << ts << ',' << (s - k) << ',' << k << ',' << format_double(m(s - k, k)) << ',' << to_string(m.flavor());
      if (with_closure_) out_ << ',' << closure;
      out_ << '\n';
    }
}

}  // namespace phaseflow::io
