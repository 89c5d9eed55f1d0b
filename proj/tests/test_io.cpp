#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "phaseflow/io.hpp"

using namespace phaseflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "phaseflow_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("wavefunction snapshots round trip bit for bit") {
  const auto w = wavefunction_from_gaussian(GaussianState::pure(0.2, 0.4, 0.5, 0.1, 0.8), GridAxis::centered(128, 10.0), 0.8, 1.5);
  const auto path = scratch("psi.pfg");
  io::write_wavefunction(path, w);
  const auto back = io::read_wavefunction(path);
  CHECK(back.x.n == w.x.n);
  CHECK(back.x.min == w.x.min);
  CHECK(back.x.step == w.x.step);
  CHECK(back.hbar == 0.8);
  CHECK(back.mass == 1.5);
  CHECK(back.psi == w.psi);
}

TEST_CASE("phase grid snapshots keep the wigner tag") {
  const auto f = phase_grid_from_gaussian({0, 0, 0.5, 0, 0.5}, GridAxis::centered(16, 4.0), GridAxis::centered(32, 4.0));
  const auto path = scratch("f.pfg");
  io::write_phase_grid(path, f);
  auto back = io::read_phase_grid(path);
  CHECK_FALSE(back.hbar.has_value());
  CHECK(back.grid.f == f.f);
  CHECK(back.grid.p.n == 32);
  io::write_phase_grid(path, f, 0.5);
  back = io::read_phase_grid(path);
  REQUIRE(back.hbar.has_value());
  CHECK(*back.hbar == 0.5);
  CHECK_THROWS(io::read_wavefunction(path));
}

TEST_CASE("snapshot header layout") {
  const auto f = phase_grid_from_gaussian({0, 0, 0.5, 0, 0.5}, GridAxis::centered(4, 4.0), GridAxis::centered(4, 4.0));
  const auto path = scratch("layout.pfg");
  io::write_phase_grid(path, f);
  std::ifstream in(path, std::ios::binary);
  std::string magic(8, '\0');
  in.read(magic.data(), 8);
  CHECK(magic == "PFGRID1\n");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  CHECK(header.find("\"kind\":\"phase_space\"") != std::string::npos);
  CHECK(fs::file_size(path) == 16 + len + 16 * sizeof(double));
}

TEST_CASE("corrupt snapshots are rejected") {
  const auto path = scratch("junk.pfg");
  std::ofstream(path) << "not a snapshot";
  CHECK_THROWS(io::read_phase_grid(path));
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("moment csv rows") {
  const auto path = scratch("m.csv");
  {
    io::MomentCsv csv(path, true);
    csv.write(0.25, gaussian_raw_moments(1.0, 0.0, {0.5, 0.0, 0.5}, 2), "gaussian-wick");
  }
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  CHECK(text.rfind("t,n,k,value,flavor,closure\n", 0) == 0);
  CHECK(text.find("0.25,2,0,1.5,classical,gaussian-wick\n") != std::string::npos);
  CHECK(text.find("0.25,0,1,0,classical,gaussian-wick\n") != std::string::npos);
}
