#include <gtest/gtest.h>
#include <zlib.h>

#include <sstream>

#include "beeflow/bench.hpp"
#include "beeflow/error.hpp"
#include "beeflow/trace.hpp"
#include "support.hpp"

using namespace beeflow;
using testing_support::TempDir;

namespace {

TraceRecord rec(std::string leaf, std::string req, double t0, double d_init, double d_in, double d_exec, double d_out,
                std::int64_t in_b = 100, std::int64_t out_b = 200, TraceStatus st = TraceStatus::Success) {
  TraceRecord r;
  r.workflow_id = "t1";
  r.request_id = std::move(req);
  r.leaf_id = std::move(leaf);
  r.t_init_start = t0;
  r.t_input_start = t0 + d_init;
  r.t_exec_start = r.t_input_start + d_in;
  r.t_output_start = r.t_exec_start + d_exec;
  r.t_end = r.t_output_start + d_out;
  r.input_bytes = in_b;
  r.output_bytes = out_b;
  r.status = st;
  return r;
}

std::string jsonl(const std::vector<TraceRecord>& rs) {
  std::ostringstream s;
  write_traces(s, rs);
  return s.str();
}

// Constant-degree pieces of the union of periods, found by probing every
// elementary segment.
std::vector<IoInterval> sweep(const std::vector<Interval>& periods) {
  std::vector<double> cuts;
  for (const Interval& p : periods) {
    cuts.push_back(p.start);
    cuts.push_back(p.end);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<IoInterval> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    std::size_t d = 0;
    for (const Interval& p : periods) d += (p.start <= mid && mid < p.end) ? 1 : 0;
    if (d == 0) continue;
    if (!out.empty() && out.back().end == cuts[i] && out.back().degree == d) {
      out.back().end = cuts[i + 1];
    } else {
      out.push_back({cuts[i], cuts[i + 1], d});
    }
  }
  return out;
}

}  // namespace

TEST(Ingest, RoundTrip) {
  const std::vector<TraceRecord> rs{rec("f1", "r1", 0, 0.5, 0.1, 1, 0.1), rec("f2", "r1", 2, 0, 0, 1, 0)};
  std::istringstream in(jsonl(rs) + "\n   \n");
  const TraceStore s = ingest(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.records()[0], rs[0]);
  EXPECT_EQ(s.records()[1], rs[1]);
  EXPECT_EQ(s.requests("t1"), 1u);
  EXPECT_EQ(s.for_leaf("t1", "f2").size(), 1u);
  EXPECT_TRUE(s.for_leaf("t1", "nope").empty());
}

TEST(Ingest, IntegerRequestIds) {
  std::istringstream in(
      R"({"workflow_id":"w","request_id":7,"leaf_id":"a","t_init_start":0,"t_input_start":0,"t_exec_start":0,)"
      R"("t_output_start":1,"t_end":1,"input_bytes":0,"output_bytes":0,"status":"success"})");
  EXPECT_EQ(ingest(in).records()[0].request_id, "7");
}

TEST(Ingest, ErrorsCarryLineNumbers) {
  const std::string good = jsonl({rec("f1", "r1", 0, 1, 1, 1, 1)});
  auto fails = [](const std::string& text, Errc code, const std::string& needle) {
    std::istringstream in(text);
    try {
      ingest(in);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
      EXPECT_TRUE(e.is_input_error());
    }
  };
  fails(good + good + "{not json\n", Errc::ParseError, "line 3");
  fails(good + R"({"workflow_id":"w"})" + "\n", Errc::ParseError, "line 2");
  TraceRecord back = rec("f1", "r1", 5, 1, 1, 1, 1);
  back.t_exec_start = 0.0;
  fails(good + jsonl({back}), Errc::TimestampOrderViolation, "line 2");
  TraceRecord neg = rec("f1", "r1", 0, 1, 1, 1, 1, -1);
  fails(jsonl({neg}), Errc::ParseError, "negative");
  std::string bad_status = jsonl({rec("f1", "r1", 0, 1, 1, 1, 1)});
  bad_status.replace(bad_status.find("success"), 7, "weird");
  fails(bad_status, Errc::ParseError, "unknown status");
}

TEST(Ingest, PlainAndGzipFiles) {
  TempDir dir("trace");
  const std::vector<TraceRecord> rs{rec("f1", "r1", 0, 1, 1, 1, 1), rec("f1", "r2", 9, 1, 1, 1, 1)};
  const std::string text = jsonl(rs);
  {
    std::ofstream(dir / "plain.jsonl") << text;
    gzFile gz = gzopen((dir / "z.jsonl.gz").string().c_str(), "wb");
    ASSERT_NE(gz, nullptr);
    gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
    gzclose(gz);
  }
  EXPECT_EQ(ingest_file(dir / "plain.jsonl").size(), 2u);
  const TraceStore z = ingest_file(dir / "z.jsonl.gz");
  ASSERT_EQ(z.size(), 2u);
  EXPECT_EQ(z.records()[1], rs[1]);
  try {
    ingest_file(dir / "missing.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
}

TEST(Estimate, MeansMatchHandComputation) {
  const WorkflowDef t = bundled::t1();
  TraceStore s;
  s.add(rec("f1", "r1", 0, 0.2, 0.4, 1.0, 0.3, 1000, 10));
  s.add(rec("f1", "r2", 5, 0.4, 0.2, 3.0, 0.1, 3000, 30));
  s.add(rec("f1", "r3", 9, 0.0, 0.0, 2.0, 0.2, 2000, 20, TraceStatus::Failure));
  s.add(rec("f4", "r1", 3, 0, 0, 0, 0, 0, 0, TraceStatus::Skipped));
  const Profiles p = estimate(s, t);
  const FunctionProfile& f1 = p.functions.at("f1");
  EXPECT_NEAR(f1.init_delay_s, (0.2 + 0.4 + 0.0) / 3, 1e-12);
  EXPECT_NEAR(f1.input_delay_s, (0.4 + 0.2 + 0.0) / 3, 1e-12);
  EXPECT_NEAR(f1.exec_delay_s, 2.0, 1e-12);
  EXPECT_NEAR(f1.output_delay_s, 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(f1.input_bytes, 2000.0);
  EXPECT_DOUBLE_EQ(f1.output_bytes, 20.0);
  EXPECT_DOUBLE_EQ(f1.exec_prob, 1.0);
  EXPECT_DOUBLE_EQ(f1.fail_prob, 1.0 / 3);
  EXPECT_EQ(f1.samples, 3u);
  EXPECT_FALSE(f1.defaulted);
  // seen only as skipped
  EXPECT_DOUBLE_EQ(p.functions.at("f4").exec_prob, 0.0);
  // never seen
  EXPECT_TRUE(p.functions.at("f2").defaulted);
  EXPECT_EQ(p.functions.at("f2").exec_delay_s, default_profile().exec_delay_s);
}

TEST(Estimate, ExecProbAndLoops) {
  WorkflowDef wf("w", sequence({leaf("a"), decorator(sequence({leaf("b"), leaf("c")}), TailSpec::retry(5), "d")}));
  wf.add_missing_functions();
  TraceStore s;
  auto r = [](std::string leaf, std::string req, std::uint32_t it) {
    TraceRecord x = rec(std::move(leaf), std::move(req), 0, 0, 0, 1, 0);
    x.workflow_id = "w";
    x.decorator_iteration = it;
    return x;
  };
  for (std::string q : {"1", "2", "3", "4"}) s.add(r("a", q, 0));
  // request 1 loops three times, the others once
  s.add(r("b", "1", 1));
  s.add(r("b", "1", 2));
  s.add(r("b", "1", 3));
  for (std::string q : {"2", "3", "4"}) s.add(r("b", q, 1));
  s.add(r("c", "2", 1));
  const Profiles p = estimate(s, wf);
  EXPECT_DOUBLE_EQ(p.loops.at("d").expected_iterations, 6.0 / 4.0);
  EXPECT_DOUBLE_EQ(p.functions.at("a").exec_prob, 1.0);
  EXPECT_DOUBLE_EQ(p.functions.at("c").exec_prob, 0.25);
  EXPECT_DOUBLE_EQ(p.functions.at("b").exec_prob, 1.0);  // 6 records over max(4, 6)
}

TEST(Align, T1DefaultTimeline) {
  const WorkflowDef t = bundled::t1();
  const ExpectedTimeline tl = align(t, default_profiles(t));
  const double d = default_profile().total_delay_s();
  EXPECT_DOUBLE_EQ(tl.at("f1").init.start, 0.0);
  EXPECT_DOUBLE_EQ(tl.at("f2").init.start, d);
  EXPECT_DOUBLE_EQ(tl.at("f5").init.start, d);
  EXPECT_DOUBLE_EQ(tl.at("f8").output.end, 3 * d);
  EXPECT_DOUBLE_EQ(tl.at("f7").output.end, 4 * d);
  EXPECT_DOUBLE_EQ(tl.at("f3").init.start, 4 * d);
  EXPECT_DOUBLE_EQ(tl.at("f1").input.start, default_profile().init_delay_s);
  EXPECT_DOUBLE_EQ(tl.at("f1").exec.length(), default_profile().exec_delay_s);
  // f3 never fails by default, so the fallback never reaches f4
  EXPECT_DOUBLE_EQ(tl.at("f4").reach, 0.0);
  EXPECT_DOUBLE_EQ(tl.at("f4").busy_s(), 0.0);
  EXPECT_DOUBLE_EQ(tl.makespan(), 5 * d);
  EXPECT_THROW(tl.at("zz"), Error);
}

TEST(Align, FailureProbabilityFeedsReach) {
  const WorkflowDef t = bundled::t1();
  Profiles p = default_profiles(t);
  p.functions.at("f3").fail_prob = 0.25;
  const ExpectedTimeline tl = align(t, p);
  EXPECT_DOUBLE_EQ(tl.at("f4").reach, 0.25);
  EXPECT_DOUBLE_EQ(tl.at("f4").exec.length(), 0.25 * default_profile().exec_delay_s);
  EXPECT_DOUBLE_EQ(success_probability(t, p, t.at("sel")), 1.0);
  Profiles missing;
  EXPECT_THROW(align(t, missing), Error);
}

TEST(Align, RetryScalesDurations) {
  WorkflowDef wf("w", decorator(leaf("a"), TailSpec::retry(3), "d"));
  wf.add_missing_functions();
  Profiles p = default_profiles(wf);
  p.functions.at("a").fail_prob = 0.5;
  const ExpectedTimeline tl = align(wf, p);
  EXPECT_DOUBLE_EQ(tl.at("a").exec.length(), 1.0 + 0.5 + 0.25);
  p.loops["d"] = LoopProfile{"d", 4.0};
  EXPECT_DOUBLE_EQ(align(wf, p).at("a").exec.length(), 4.0);
}

TEST(IoIntervals, MatchesSweepOnRandomTrees) {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const WorkflowDef t = bench::random_tree(rng);
    const Profiles p = bench::random_profiles(t, rng);
    const ExpectedTimeline tl = align(t, p);
    std::vector<std::string> subset;
    std::vector<Interval> periods;
    for (const LeafSchedule& e : tl.entries()) {
      if (rng() % 3 == 0) continue;
      subset.push_back(e.leaf_id);
      for (const Interval& iv : io_periods(e)) periods.push_back(iv);
    }
    EXPECT_EQ(io_intervals(tl, subset), sweep(periods)) << "tree " << i;
  }
}

TEST(IoIntervals, T1Overlap) {
  const WorkflowDef t = bundled::t1();
  const ExpectedTimeline tl = align(t, default_profiles(t));
  const std::vector<std::string> pair{"f2", "f5"};
  const auto ivs = io_intervals(tl, pair);
  ASSERT_EQ(ivs.size(), 2u);  // input periods together, output periods together
  EXPECT_EQ(ivs[0].degree, 2u);
  EXPECT_NEAR(ivs[0].length(), 0.1, 1e-12);
  const std::vector<std::string> unknown{"zz"};
  EXPECT_THROW(io_intervals(tl, unknown), Error);
}
