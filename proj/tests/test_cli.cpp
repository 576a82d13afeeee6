/*
* Copyright (C) 2026 covplan contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include "covplan/cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace covplan;
namespace fs = std::filesystem;

namespace
{

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "covplan");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(int(argv.size()), argv.data(), out, err);
    o.out  = out.str();
    o.err  = err.str();
    return o;
}

fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::path(testing::TempDir()) / ("covplan_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_ensemble(const fs::path& dir)
{
    json list = json::array();
    for (int k = 0; k < 10; ++k) {
        list.push_back(to_json(synthetic::default_rates(2.3 + 0.04 * k)));
    }
    const auto path = (dir / "ensemble.json").string();
    write_file(path, list.dump());
    return path;
}

/// CLI samples with a swarm small enough for unit tests.
fs::path quick_samples(const std::string& name)
{
    const auto dir = fresh_dir(name);
    EXPECT_EQ(run_cli({"synth", "--out", dir.string()}).code, cli::ok);
    auto manifest                     = json::parse(read_file((dir / "manifest.json").string()));
    manifest["swarm"]["n_particles"]  = 8;
    manifest["swarm"]["n_iterations"] = 5;
    write_file((dir / "manifest.json").string(), manifest.dump(2));
    return dir;
}

} // namespace

TEST(Cli, SynthWritesSampleInputs)
{
    const auto dir = fresh_dir("synth");
    ASSERT_EQ(run_cli({"synth", "--out", dir.string()}).code, cli::ok);
    for (const char* f : {"observed.csv", "holdout.csv", "mobility.csv", "manifest.json", "scenario.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_EQ(parse_observed_csv(read_file((dir / "observed.csv").string())).size(), 150u);
    const auto holdout = parse_observed_csv(read_file((dir / "holdout.csv").string()));
    EXPECT_EQ(holdout.size(), 40u);
    EXPECT_EQ(holdout.start_date, Date(2020, 3, 1) + 150);
    EXPECT_NO_THROW(manifest_from_json(parse_json(read_file((dir / "manifest.json").string()))));
    EXPECT_NO_THROW(scenario_from_json(parse_json(read_file((dir / "scenario.json").string()))));
}

TEST(Cli, ScenarioRunMatchesLibrary)
{
    const auto dir      = quick_samples("scenario");
    const auto ensemble = write_ensemble(dir);
    const auto out      = dir / "run";
    const auto r = run_cli({"scenario", "run", "--scenario", (dir / "scenario.json").string(), "--ensemble", ensemble,
                            "--out", out.string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    const auto direct = pipeline::run_scenario_documents(read_file((dir / "scenario.json").string()),
                                                         read_file(ensemble), 1);
    EXPECT_EQ(read_file((out / "bands.csv").string()), direct.bands_csv);
    EXPECT_EQ(read_file((out / "extrema.csv").string()), direct.extrema_csv);
    const auto extrema = json::parse(read_file((out / "extrema.json").string()));
    EXPECT_FALSE(extrema["entries"].empty());

    const auto again = run_cli({"--threads", "3", "scenario", "run", "--scenario", (dir / "scenario.json").string(),
                                "--ensemble", ensemble, "--out", (dir / "run2").string()});
    ASSERT_EQ(again.code, cli::ok);
    EXPECT_EQ(read_file((dir / "run2" / "bands.csv").string()), direct.bands_csv);

    const auto ext = run_cli({"extrema", "--bands", (out / "bands.csv").string()});
    ASSERT_EQ(ext.code, cli::ok);
    EXPECT_EQ(ext.out, direct.extrema_csv);
    const auto ext_json = run_cli({"extrema", "--bands", (out / "bands.csv").string(), "--json"});
    ASSERT_EQ(ext_json.code, cli::ok);
    EXPECT_EQ(json::parse(ext_json.out), extrema);
}

TEST(Cli, CalibrateThenValidate)
{
    const auto dir = quick_samples("calibrate");
    const auto out = dir / "fit";
    const auto r   = run_cli({"calibrate", "--manifest", (dir / "manifest.json").string(), "--out", out.string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("best loss"), std::string::npos);
    const auto artifact = artifact_from_json(parse_json(read_file((out / "calibration.json").string())));
    EXPECT_FALSE(artifact.ensemble_rates.empty());
    EXPECT_EQ(parse_bands_csv(read_file((out / "bands.csv").string())).days(), 190u);

    const auto v = run_cli({"validate", "--bands", (out / "bands.csv").string(), "--holdout",
                            (dir / "holdout.csv").string()});
    ASSERT_EQ(v.code, cli::ok) << v.err;
    const auto metrics = json::parse(v.out);
    EXPECT_EQ(metrics["overlap_days"], 40);
    EXPECT_EQ(metrics["first_date"], "2020-07-29");

    // the artifact feeds scenario runs directly
    const auto s = run_cli({"scenario", "run", "--scenario", (dir / "scenario.json").string(), "--ensemble",
                            (out / "calibration.json").string(), "--out", (dir / "scen").string()});
    EXPECT_EQ(s.code, cli::ok) << s.err;

    // explicit inputs override the manifest paths
    const auto explicit_run = run_cli({"calibrate", "--manifest", (dir / "manifest.json").string(), "--observed",
                                       (dir / "observed.csv").string(), "--out", (dir / "fit2").string()});
    ASSERT_EQ(explicit_run.code, cli::ok);
    EXPECT_EQ(read_file((dir / "fit2" / "calibration.json").string()), read_file((out / "calibration.json").string()));
}

TEST(Cli, SimulateWritesTrajectory)
{
    const auto dir = fresh_dir("simulate");
    write_file((dir / "config.json").string(), to_json(synthetic::default_population()).dump());
    write_file((dir / "schedule.json").string(), to_json(ParameterSchedule{synthetic::default_rates(), {}}).dump());
    const auto r = run_cli({"simulate", "--config", (dir / "config.json").string(), "--schedule",
                            (dir / "schedule.json").string(), "--horizon", "30", "--out",
                            (dir / "traj.csv").string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    const auto text = read_file((dir / "traj.csv").string());
    EXPECT_EQ(csv::lines(text).size(), 32u);
}

TEST(Cli, ValidationErrorsExitTwo)
{
    const auto dir = quick_samples("invalid");
    EXPECT_EQ(run_cli({}).code, cli::validation_error);
    EXPECT_EQ(run_cli({"bogus"}).code, cli::validation_error);
    EXPECT_EQ(run_cli({"scenario", "run", "--scenario", "/nonexistent.json", "--ensemble", "/nonexistent.json",
                       "--out", dir.string()})
                  .code,
              cli::validation_error);

    auto scenario = json::parse(read_file((dir / "scenario.json").string()));
    scenario.erase("horizon_days");
    write_file((dir / "bad.json").string(), scenario.dump());
    const auto r = run_cli({"scenario", "run", "--scenario", (dir / "bad.json").string(), "--ensemble",
                            write_ensemble(dir), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::validation_error);
    EXPECT_NE(r.err.find("schema-invalid"), std::string::npos);
    EXPECT_NE(r.err.find("horizon_days"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out"));

    write_file((dir / "gap.csv").string(), "date,hospitalized,icu,recovered,deceased\n2020-03-01,1,1,1,1\n"
                                           "2020-03-03,1,1,1,1\n");
    const auto gap = run_cli({"calibrate", "--manifest", (dir / "manifest.json").string(), "--observed",
                              (dir / "gap.csv").string(), "--out", (dir / "fit").string()});
    EXPECT_EQ(gap.code, cli::validation_error);
    EXPECT_NE(gap.err.find("date-gap"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOne)
{
    const auto dir = quick_samples("runtime");
    const auto r   = run_cli({"scenario", "run", "--scenario", (dir / "scenario.json").string(), "--ensemble",
                              write_ensemble(dir), "--out", "/dev/null/sub"});
    EXPECT_EQ(r.code, cli::runtime_error);
    EXPECT_NE(r.err.find("io"), std::string::npos);

    auto manifest        = json::parse(read_file((dir / "manifest.json").string()));
    manifest["observed"] = "missing.csv";
    write_file((dir / "manifest.json").string(), manifest.dump());
    EXPECT_EQ(run_cli({"calibrate", "--manifest", (dir / "manifest.json").string(), "--out", (dir / "fit").string()})
                  .code,
              cli::runtime_error);
}

TEST(Cli, HelpExitsZero)
{
    const auto r = run_cli({"--help"});
    EXPECT_EQ(r.code, cli::ok);
    EXPECT_NE(r.out.find("scenario"), std::string::npos);
}

#ifdef COVPLAN_CLI_PATH
TEST(Cli, BinaryExitCodes)
{
    const auto dir = quick_samples("binary");
    auto status    = [](const std::string& args) {
        const int raw = std::system((std::string(COVPLAN_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(raw);
    };
    EXPECT_EQ(status("scenario run --scenario " + (dir / "scenario.json").string() + " --ensemble " +
                     write_ensemble(dir) + " --out " + (dir / "run").string()),
              0);
    EXPECT_EQ(status("scenario run --scenario /nonexistent"), 2);
    EXPECT_EQ(status("scenario run --scenario " + (dir / "scenario.json").string() + " --ensemble " +
                     write_ensemble(dir) + " --out /dev/null/sub"),
              1);
}
#endif
