#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "casc/config.hpp"
#include "casc/errors.hpp"
#include "casc/parallel.hpp"
#include "casc/report.hpp"
#include "support.hpp"

using namespace casc;
namespace fs = std::filesystem;

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "case = data/small\n"
      "rounds = 12   # trailing\n"
      "alpha = 0.9\n"
      "memory = two_point\n"
      "outage = banded\n"
      "epsilon = step:0.05,0.02\n"
      "control = segmented\n"
      "segments = 4\n"
      "objective = mean_variance\n"
      "samples = 100\n"
      "lambda = 0.25\n"
      "seed = 42\n"
      "workers = 3\n"
      "contingency_k = 2\n"
      "tree = bfs\n");
  const auto c = parse_config(in, "/base");
  CHECK(c.buses == fs::path("/base/data/small/buses.csv"));
  CHECK(c.lines == fs::path("/base/data/small/lines.csv"));
  CHECK(c.cascade.rounds == 12);
  CHECK(c.cascade.alpha == 0.9);
  CHECK(c.cascade.memory == MemoryVariant::TwoPoint);
  CHECK(c.cascade.outage.kind == OutageKind::Banded);
  CHECK(c.cascade.outage.epsilon.kind == EpsilonSchedule::Kind::Step);
  CHECK(c.control == ControlSource::Segmented);
  CHECK(c.segments == 4);
  CHECK(c.objective.kind == ObjectiveKind::MeanMinusVariance);
  CHECK(c.objective.samples == 100);
  CHECK(c.objective.lambda == 0.25);
  CHECK(c.seed == 42);
  CHECK(c.objective.seed == 42);
  CHECK(c.workers == 3);
  CHECK(c.search.workers == 3);
  CHECK(c.contingency.K == 2);
  CHECK(c.contingency.tree == TreeRule::Bfs);

  RunConfig d;
  CHECK(d.cascade.rounds == 8);
  try {
    apply_setting(d, "roundz", "3");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "unknown key 'roundz'");
  }
  CHECK_THROWS_AS(apply_setting(d, "rounds", "three"), ConfigError);
  CHECK_THROWS_AS(apply_setting(d, "outage", "sometimes"), ConfigError);
  std::istringstream bad("rounds 3\n");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("validate") {
  RunConfig c;
  CHECK_THROWS_AS(validate(c), ConfigError);
  const auto dir = fs::temp_directory_path() / "casc_test_validate";
  fs::create_directories(dir);
  write_case(support::triangle(), dir / "buses.csv", dir / "lines.csv");
  apply_setting(c, "case", dir.string());
  validate(c);
  c.cascade.rounds = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.cascade.rounds = 3;
  c.control = ControlSource::File;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("build_scenario") {
  const auto dir = fs::temp_directory_path() / "casc_test_scenario";
  fs::create_directories(dir);
  write_case(support::triangle(), dir / "buses.csv", dir / "lines.csv");
  RunConfig c;
  apply_setting(c, "case", dir.string());
  apply_setting(c, "contingency_k", "1");
  ContingencyResult r;
  const auto s = build_scenario(c, &r);
  CHECK(r.line_ids == std::vector<int>{2});
  CHECK(s.grid.line_count() == 2);
  REQUIRE(s.initial_flows.size() == 2);
  CHECK(s.initial_flows[0] == doctest::Approx(2.0));
  CHECK(s.initial_flows[1] == doctest::Approx(-1.0));
}

TEST_CASE("parallel map") {
  auto square = [](std::size_t i) { return static_cast<double>(i * i) * 0.5; };
  const auto a = parallel_map<double>(100, square, 1);
  const auto b = parallel_map<double>(100, square, 8);
  CHECK(a == b);
  CHECK(a[10] == 50.0);
  CHECK(parallel_map<double>(0, square, 4).empty());

  auto failing = [](std::size_t i) -> int {
    if (i == 7 || i == 31) throw std::runtime_error("boom");
    return static_cast<int>(i);
  };
  for (int workers : {1, 4}) {
    try {
      parallel_map<int>(50, failing, workers);
      FAIL("expected TaskError");
    } catch (const TaskError& e) {
      CHECK(e.index() == 7);
      CHECK(std::string(e.what()).find("task 7") != std::string::npos);
    }
  }

  // A task that fails once succeeds on the retry.
  std::atomic<int> calls{0};
  auto flaky = [&](std::size_t) {
    if (calls++ == 0) throw std::runtime_error("transient");
    return 1;
  };
  CHECK(serial_map<int>(1, flaky) == std::vector<int>{1});
}

TEST_CASE("report") {
  const std::vector<double> y{100.0, 50.0, 99.5, 0.0, 75.25};
  const auto r = make_report(80.0, y);
  CHECK(r.max == 100.0);
  CHECK(r.min == 0.0);
  CHECK(r.ave == doctest::Approx(64.95));
  CHECK(r.min <= r.ave);
  CHECK(r.ave <= r.max);
  CHECK(r.stdd >= 0.0);
  long total = 0;
  for (long h : r.histogram) total += h;
  CHECK(total == 5);
  CHECK(r.histogram[99] == 2);
  CHECK(r.histogram[0] == 1);

  std::ostringstream out;
  write_report(r, out);
  const auto text = out.str();
  CHECK(text.substr(0, text.find('\n')) == "DetY,MaxY,MinY,AveY,StddY");
  std::ostringstream hist;
  write_histogram(r, hist);
  CHECK(hist.str().rfind("yield_lo,yield_hi,count\n0,1,1\n", 0) == 0);

  const auto same = make_report(70.0, std::vector<double>(4, 42.0));
  CHECK(same.stdd == 0.0);
  CHECK(same.ave == 42.0);
}

}  // TEST_SUITE
