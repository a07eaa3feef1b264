// SPDX-License-Identifier: Apache-2.0
//
// sicsim - full-duplex self-interference cancellation simulator
// Copyright (C) 2026 The sicsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "sicsim/errors.hpp"
#include "sicsim/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace {

using nlohmann::json;
using namespace sicsim;

enum ExitCode { ok = 0, failure = 1, invalid = 2, diverged = 3, not_converged = 4 };

struct CommonFlags {
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    bool oracle = false;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--out", f.out, "Artifact directory");
    cmd->add_option("--seed", f.seed, "Override the scenario seed");
    cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
    cmd->add_flag("--oracle", f.oracle, "Use the block-LS digital canceller instead of LMS");
}

Scenario load_with_overrides(json doc, const CommonFlags& f)
{
    if (f.seed) doc["seed"] = *f.seed;
    return scenario_from_json(doc);
}

std::filesystem::path output_dir(const Scenario& s, const CommonFlags& f)
{
    if (!f.out.empty()) return f.out;
    if (!s.output_dir.empty()) return s.output_dir;
    return std::filesystem::path("runs") / s.name;
}

struct RunOutcome {
    int code = ok;
    std::optional<RunMetrics> metrics;
    std::string error;
};

RunOutcome execute(const Scenario& s, const std::filesystem::path& dir, const CommonFlags& f)
{
    RunOutcome out;
    try {
        const auto art = run_scenario(s, RunOptions{.quiet = f.quiet, .digital_oracle = f.oracle});
        write_artifacts(art, dir);
        out.code = art.exit_code();
        out.metrics = art.metrics;
    } catch (const DivergenceError& e) {
        out.code = diverged;
        out.error = e.what();
    } catch (const ConfigError& e) {
        out.code = invalid;
        out.error = e.what();
    } catch (const ArgumentError& e) {
        out.code = invalid;
        out.error = e.what();
    } catch (const std::exception& e) {
        out.code = failure;
        out.error = e.what();
    }
    if (out.code != ok && out.code != not_converged) {
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "summary.json") << failure_summary(s, out.error, out.code).dump(2) << '\n';
    }
    return out;
}

// Sets a dotted path such as "rf_canceller.mu" or "channel.multipath.0.gain_db".
void set_path(json& doc, const std::string& path, const json& value)
{
    json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError(path, "empty parameter path");
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const bool last = i + 1 == parts.size();
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(parts[i]);
            } catch (const std::exception&) {
                throw ConfigError(path, "'" + parts[i] + "' is not a list index in " + path);
            }
            if (idx >= node->size()) throw ConfigError(path, "index " + parts[i] + " out of range in " + path);
            node = &(*node)[idx];
        } else if (node->is_object()) {
            if (!last && !node->contains(parts[i])) (*node)[parts[i]] = json::object();
            node = &(*node)[parts[i]];
        } else {
            throw ConfigError(path, "cannot descend into '" + parts[i] + "' in " + path);
        }
    }
    *node = value;
}

std::vector<json> parse_values(const std::string& list)
{
    std::vector<json> values;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        try {
            values.push_back(json::parse(item));
        } catch (const json::parse_error&) {
            values.emplace_back(item);
        }
    }
    if (values.empty()) throw ConfigError("values", "--values must list at least one value");
    return values;
}

std::string csv_number(const std::optional<double>& v)
{
    if (!v) return "";
    std::ostringstream os;
    os.precision(10);
    os << *v;
    return os.str();
}

int cmd_run(const std::string& file, const CommonFlags& f)
{
    const Scenario s = load_with_overrides(load_scenario_json(file), f);
    const auto dir = output_dir(s, f);
    const auto out = execute(s, dir, f);
    if (!out.error.empty()) std::cerr << "error: " << out.error << '\n';
    if (!f.quiet && out.metrics) {
        std::ifstream in(dir / "summary.json");
        std::cout << render_report(json::parse(in));
    }
    return out.code;
}

int cmd_sweep(const std::string& file, const std::string& param, const std::string& values_arg, unsigned jobs,
              const CommonFlags& f)
{
    const json doc = load_scenario_json(file);
    const auto values = parse_values(values_arg);
    std::vector<Scenario> scenarios;
    for (const auto& v : values) {
        json d = doc;
        set_path(d, param, v);
        scenarios.push_back(load_with_overrides(d, f));
    }
    const auto root = output_dir(scenarios.front(), f);
    std::filesystem::create_directories(root);

    std::vector<RunOutcome> outcomes(values.size());
    std::vector<std::filesystem::path> dirs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dirs[i] = root / ("run_" + std::to_string(i));

    CommonFlags worker_flags = f;
    worker_flags.quiet = true;
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            outcomes[i] = execute(scenarios[i], dirs[i], worker_flags);
            if (!f.quiet) {
                std::lock_guard lock(log_mutex);
                std::cerr << "[sweep] " << param << "=" << values[i].dump() << " exit " << outcomes[i].code << '\n';
            }
        }
    };
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(values.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ofstream csv(root / "sweep.csv");
    csv << "run,param,value,exit_code,converged,rf_suppression_db,digital_suppression_db,total_suppression_db,"
           "digital_residual_dbfs\n";
    int worst = ok;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& o = outcomes[i];
        std::string value = values[i].is_string() ? values[i].get<std::string>() : values[i].dump();
        if (value.find(',') != std::string::npos) value = "\"" + value + "\"";
        csv << dirs[i].filename().string() << ',' << param << ',' << value << ',' << o.code << ',';
        if (o.metrics) {
            const auto& m = *o.metrics;
            const bool c = m.converged;
            csv << (c ? "true" : "false") << ',' << csv_number(c ? std::optional(m.rf_suppression_db()) : std::nullopt)
                << ',' << csv_number(c ? std::optional(m.digital_suppression_db()) : std::nullopt) << ','
                << csv_number(c ? std::optional(m.total_suppression_db()) : std::nullopt) << ','
                << csv_number(c ? std::optional(m.digital_residual_db) : std::nullopt) << '\n';
        } else {
            csv << "false,,,,\n";
        }
        worst = std::max(worst, o.code);
    }
    if (!f.quiet) std::cout << "sweep of " << values.size() << " runs written to " << root.string() << '\n';
    return worst;
}

int cmd_validate(const std::string& file)
{
    const Scenario s = load_scenario(file);
    std::cout << "ok: " << s.name << " (" << s.duration_samples << " samples, " << s.waveform.bandwidth_hz / 1e6
              << " MHz, P=" << s.digital.P << ", " << s.rf.tap_delays.size() << " taps, " << s.events.size()
              << " events)\n";
    return ok;
}

int cmd_report(const std::string& dir)
{
    const auto path = std::filesystem::path(dir) / "summary.json";
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open " << path.string() << '\n';
        return failure;
    }
    std::cout << render_report(json::parse(in));
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Full-duplex self-interference cancellation simulator"};
    app.require_subcommand(1);

    std::string file, run_dir, param, values;
    unsigned jobs = 0;
    CommonFlags run_flags, sweep_flags;

    auto* run = app.add_subcommand("run", "Run one scenario and write artifacts");
    run->add_option("scenario", file, "Scenario JSON file")->required();
    add_common(run, run_flags);

    auto* sweep = app.add_subcommand("sweep", "Run a scenario over a list of parameter values");
    sweep->add_option("scenario", file, "Scenario JSON file")->required();
    sweep->add_option("--param", param, "Dotted parameter path, e.g. rf_canceller.mu")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)");
    add_common(sweep, sweep_flags);

    auto* val = app.add_subcommand("validate", "Check a scenario file");
    val->add_option("scenario", file, "Scenario JSON file")->required();

    auto* rep = app.add_subcommand("report", "Print summary tables from a run directory");
    rep->add_option("run_dir", run_dir, "Run artifact directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : invalid;
    }

    try {
        if (*run) return cmd_run(file, run_flags);
        if (*sweep) return cmd_sweep(file, param, values, jobs, sweep_flags);
        if (*val) return cmd_validate(file);
        if (*rep) return cmd_report(run_dir);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return failure;
}
