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

#include "sicsim/scenario.hpp"

#include "sicsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

namespace sicsim {

using nlohmann::json;

namespace {

constexpr double deg = std::numbers::pi / 180.0;

// Tracks which keys of one JSON object were consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_, path_ + " must be an object");
    }

    const json* find(const std::string& key)
    {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key)
    {
        const json* v = find(key);
        if (!v) throw ConfigError(field(key), "missing required key '" + field(key) + "'");
        return *v;
    }

    double real(const std::string& key, std::optional<double> def = std::nullopt)
    {
        const json* v = find(key);
        if (!v) {
            if (def) return *def;
            throw ConfigError(field(key), "missing required key '" + field(key) + "'");
        }
        return as_real(*v, field(key));
    }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt)
    {
        const json* v = find(key);
        if (!v) {
            if (def) return *def;
            throw ConfigError(field(key), "missing required key '" + field(key) + "'");
        }
        return as_integer(*v, field(key));
    }

    bool boolean(const std::string& key, bool def)
    {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(field(key), field(key) + " must be a boolean");
        return v->get<bool>();
    }

    std::string text(const std::string& key, std::optional<std::string> def = std::nullopt)
    {
        const json* v = find(key);
        if (!v) {
            if (def) return *def;
            throw ConfigError(field(key), "missing required key '" + field(key) + "'");
        }
        if (!v->is_string()) throw ConfigError(field(key), field(key) + " must be a string");
        return v->get<std::string>();
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const
    {
        for (const auto& [key, value] : j_.items())
            if (!used_.count(key))
                throw ConfigError(field(key), "unknown key '" + key + "' in " + (path_.empty() ? "scenario" : path_));
    }

    static double as_real(const json& v, const std::string& name)
    {
        if (!v.is_number()) throw ConfigError(name, name + " must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(name, name + " must be finite");
        return d;
    }

    static std::int64_t as_integer(const json& v, const std::string& name)
    {
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
        }
        throw ConfigError(name, name + " must be an integer");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::size_t non_negative(std::int64_t v, const std::string& name)
{
    if (v < 0) throw ConfigError(name, name + " must be ≥ 0");
    return static_cast<std::size_t>(v);
}

cplx parse_complex(const json& v, const std::string& name)
{
    if (v.is_number()) return {ObjectReader::as_real(v, name), 0.0};
    if (v.is_array() && v.size() == 2)
        return {ObjectReader::as_real(v[0], name + "[0]"), ObjectReader::as_real(v[1], name + "[1]")};
    throw ConfigError(name, name + " must be a number or a [re, im] pair");
}

std::vector<cplx> parse_complex_list(const json& v, const std::string& name)
{
    if (!v.is_array()) throw ConfigError(name, name + " must be a list");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_complex(v[i], name + "[" + std::to_string(i) + "]"));
    return out;
}

// Gain as "gain" (number or [re, im]) or "gain_db" with optional "phase_deg".
cplx parse_gain(ObjectReader& r)
{
    const json* g = r.find("gain");
    const json* gdb = r.find("gain_db");
    const json* ph = r.find("phase_deg");
    if (g && (gdb || ph)) throw ConfigError(r.field("gain"), "use either gain or gain_db/phase_deg in " + r.field(""));
    if (g) return parse_complex(*g, r.field("gain"));
    if (!gdb) throw ConfigError(r.field("gain"), "missing required key '" + r.field("gain") + "'");
    const double mag = std::pow(10.0, ObjectReader::as_real(*gdb, r.field("gain_db")) / 20.0);
    const double phase = ph ? ObjectReader::as_real(*ph, r.field("phase_deg")) : 0.0;
    return std::polar(mag, phase * deg);
}

cplx parse_gain_value(const json& v, const std::string& name)
{
    if (v.is_object()) {
        ObjectReader r(v, name);
        const cplx g = parse_gain(r);
        r.finish();
        return g;
    }
    return parse_complex(v, name);
}

PathComponent parse_component(const json& v, const std::string& name)
{
    ObjectReader r(v, name);
    PathComponent c;
    c.delay_samples = r.real("delay_samples");
    c.gain = parse_gain(r);
    r.finish();
    return c;
}

std::vector<PathComponent> parse_components(const json& v, const std::string& name)
{
    if (!v.is_array()) throw ConfigError(name, name + " must be a list");
    std::vector<PathComponent> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_component(v[i], name + "[" + std::to_string(i) + "]"));
    return out;
}

WaveformConfig parse_waveform(const json& v)
{
    ObjectReader r(v, "waveform");
    const double bw = r.real("bandwidth_hz");
    WaveformConfig base;
    bool preset = bw == 20e6 || bw == 40e6 || bw == 80e6;
    if (preset) base = default_waveform(bw);
    base.bandwidth_hz = bw;
    auto need = [&](const std::string& key) {
        if (!preset && !v.contains(key))
            throw ConfigError(r.field(key), "missing required key '" + r.field(key) + "' (no preset for this bandwidth)");
    };
    need("sample_rate_hz");
    need("num_subcarriers");
    need("active_subcarriers");
    need("cp_len");
    base.sample_rate_hz = r.real("sample_rate_hz", base.sample_rate_hz);
    base.num_subcarriers = static_cast<int>(r.integer("num_subcarriers", base.num_subcarriers));
    base.active_subcarriers = static_cast<int>(r.integer("active_subcarriers", base.active_subcarriers));
    base.cp_len = static_cast<int>(r.integer("cp_len", base.cp_len));
    base.tx_power_dbfs = r.real("tx_power_dbfs", base.tx_power_dbfs);
    base.shaping = r.boolean("shaping", true);
    base.crest_factor_db = r.real("crest_factor_db", 9.0);
    const std::string c = r.text("constellation", to_string(base.constellation));
    try {
        base.constellation = constellation_from_string(c);
    } catch (const ConfigError& e) {
        throw ConfigError("waveform.constellation", e.what());
    }
    r.finish();
    return base;
}

PaModel parse_pa(const json& v, double drive_dbfs)
{
    ObjectReader r(v, "pa");
    const std::string model = r.text("model");
    const double gain = r.real("linear_gain_db", 24.0);
    PaModel pa;
    if (model == "nonlinear") {
        NonlinearPaSpec spec;
        spec.drive_dbfs = drive_dbfs;
        spec.linear_gain_db = gain;
        spec.third_order_dbc = r.real("third_order_dbc", spec.third_order_dbc);
        spec.order_step_db = r.real("order_step_db", spec.order_step_db);
        spec.max_order = static_cast<int>(r.integer("max_order", spec.max_order));
        if (const json* m = r.find("memory")) spec.memory = parse_complex_list(*m, "pa.memory");
        pa = make_nonlinear_pa(spec);
    } else if (model == "linear") {
        std::vector<cplx> mem = NonlinearPaSpec{}.memory;
        if (const json* m = r.find("memory")) mem = parse_complex_list(*m, "pa.memory");
        pa = make_linear_pa(gain, mem);
    } else if (model == "explicit") {
        const json& branches = r.require("branches");
        if (!branches.is_array()) throw ConfigError("pa.branches", "pa.branches must be a list");
        pa.linear_gain_db = gain;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const std::string name = "pa.branches[" + std::to_string(i) + "]";
            ObjectReader b(branches[i], name);
            pa.orders.push_back(static_cast<int>(b.integer("order")));
            pa.branch_firs.push_back(parse_complex_list(b.require("fir"), name + ".fir"));
            b.finish();
        }
    } else {
        throw ConfigError("pa.model", "pa.model must be one of nonlinear, linear, explicit");
    }
    r.finish();
    return pa;
}

SiChannelModel parse_channel(const json& v)
{
    ObjectReader r(v, "channel");
    SiChannelModel ch;
    ch.leakage = parse_component(r.require("leakage"), "channel.leakage");
    ch.reflection = parse_component(r.require("reflection"), "channel.reflection");
    if (const json* m = r.find("multipath")) ch.multipath = parse_components(*m, "channel.multipath");
    const json* nf = r.find("rx_noise_floor_dbfs");
    if (!nf) throw ConfigError("channel.rx_noise_floor_dbfs", "missing required key 'channel.rx_noise_floor_dbfs'");
    ch.rx_noise_floor_dbfs = nf->is_null() ? -std::numeric_limits<double>::infinity()
                                           : ObjectReader::as_real(*nf, "channel.rx_noise_floor_dbfs");
    r.finish();
    return ch;
}

RfCancellerState parse_rf(const json& v)
{
    ObjectReader r(v, "rf_canceller");
    RfCancellerState s;
    const json& taps = r.require("tap_delays");
    if (!taps.is_array()) throw ConfigError("rf_canceller.tap_delays", "rf_canceller.tap_delays must be a list");
    for (std::size_t i = 0; i < taps.size(); ++i)
        s.tap_delays.push_back(ObjectReader::as_real(taps[i], "rf_canceller.tap_delays[" + std::to_string(i) + "]"));
    if (const json* w = r.find("initial_weights"))
        s.weights = parse_complex_list(*w, "rf_canceller.initial_weights");
    else
        s.weights.assign(s.tap_delays.size(), cplx{});
    s.mu = r.real("mu", s.mu);
    s.leakage_factor = r.real("leakage_factor", s.leakage_factor);
    s.update_decimation = non_negative(r.integer("update_decimation", 1), "rf_canceller.update_decimation");
    s.loop_delay = non_negative(r.integer("loop_delay", 8), "rf_canceller.loop_delay");
    s.power_time_constant = r.real("power_time_constant", s.power_time_constant);
    s.trace_interval = non_negative(r.integer("trace_interval", 512), "rf_canceller.trace_interval");
    if (const json* g = r.find("gear"); g && !g->is_null()) {
        ObjectReader gr(*g, "rf_canceller.gear");
        GearShift gs;
        gs.tracking_mu = gr.real("tracking_mu", gs.tracking_mu);
        gs.window = non_negative(gr.integer("window", 2048), "rf_canceller.gear.window");
        gs.settle_db = gr.real("settle_db", gs.settle_db);
        gs.reacquire_db = gr.real("reacquire_db", gs.reacquire_db);
        gr.finish();
        s.gear = gs;
    }
    r.finish();
    if (!(s.mu > 0.0)) throw ConfigError("rf_canceller.mu", "rf_canceller.mu must be > 0");
    return s;
}

DigitalCancellerConfig parse_digital(const json& v, bool& compare_linear)
{
    ObjectReader r(v, "digital_canceller");
    DigitalCancellerConfig c;
    c.P = static_cast<int>(r.integer("P"));
    c.memory_pre = static_cast<int>(r.integer("memory_pre", c.memory_pre));
    c.memory_post = static_cast<int>(r.integer("memory_post", c.memory_post));
    c.mu = r.real("mu", c.mu);
    c.fit_block = non_negative(r.integer("fit_block", static_cast<std::int64_t>(c.fit_block)), "digital_canceller.fit_block");
    c.trace_interval =
        non_negative(r.integer("trace_interval", static_cast<std::int64_t>(c.trace_interval)), "digital_canceller.trace_interval");
    const std::string mode = r.text("mode", "lms");
    if (mode == "lms")
        c.mode = DcMode::lms;
    else if (mode == "oracle")
        c.mode = DcMode::oracle;
    else
        throw ConfigError("digital_canceller.mode", "digital_canceller.mode must be lms or oracle");
    compare_linear = r.boolean("compare_linear", true);
    r.finish();
    return c;
}

ChannelEvent parse_event(const json& v, const std::string& name)
{
    ObjectReader r(v, name);
    ChannelEvent ev;
    ev.at_sample = non_negative(r.integer("at_sample"), name + ".at_sample");
    const std::string field = r.text("field");
    const json& value = r.require("value");
    if (field == "reflection_gain") {
        ev.field = EventField::reflection_gain;
        ev.value = parse_gain_value(value, name + ".value");
    } else if (field == "reflection_delay") {
        ev.field = EventField::reflection_delay;
        ev.value = ObjectReader::as_real(value, name + ".value");
    } else if (field == "multipath_set") {
        ev.field = EventField::multipath_set;
        ev.value = parse_components(value, name + ".value");
    } else {
        throw ConfigError(name + ".field", name + ".field must be reflection_gain, reflection_delay or multipath_set");
    }
    r.finish();
    return ev;
}

std::size_t line_of(const std::string& text, std::size_t byte)
{
    const std::size_t end = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

void prefixed(const std::string& prefix, const auto& fn)
{
    try {
        fn();
    } catch (const ConfigError& e) {
        const std::string f = e.field().rfind(prefix, 0) == 0 ? e.field() : prefix + "." + e.field();
        throw ConfigError(f, e.what());
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void log(const RunOptions& o, const std::string& msg)
{
    if (!o.quiet) std::cerr << "[sicsim] " << msg << '\n';
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

json opt_json(const std::optional<double>& v) { return v ? json(round4(*v)) : json(nullptr); }
json opt_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

json complex_list(const std::vector<cplx>& v)
{
    json a = json::array();
    for (const auto& c : v) a.push_back({c.real(), c.imag()});
    return a;
}

double mean_db_of_windows(std::span<const double> wp_db, std::size_t begin, std::size_t end)
{
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += from_db(wp_db[i]);
    return to_db(acc / static_cast<double>(end - begin));
}

} // namespace

std::string to_string(EventField f)
{
    switch (f) {
    case EventField::reflection_gain: return "reflection_gain";
    case EventField::reflection_delay: return "reflection_delay";
    case EventField::multipath_set: return "multipath_set";
    }
    return "?";
}

void validate(const Scenario& s)
{
    if (s.duration_samples == 0) throw ConfigError("duration_samples", "duration_samples must be > 0");
    prefixed("waveform", [&] { validate(s.waveform); });
    prefixed("pa", [&] { validate(s.pa); });
    prefixed("channel", [&] { validate(s.channel); });
    if (s.channel.leakage.delay_samples >= static_cast<double>(s.duration_samples) ||
        s.channel.reflection.delay_samples >= static_cast<double>(s.duration_samples))
        throw ConfigError("channel", "channel delays must be shorter than duration_samples");
    prefixed("rf_canceller", [&] { validate(s.rf); });
    if (!(s.rf.mu > 0.0)) throw ConfigError("rf_canceller.mu", "rf_canceller.mu must be > 0");
    prefixed("digital_canceller", [&] { validate(s.digital); });
    prefixed("adc", [&] { validate(s.adc); });
    validate(s.convergence);
    const double bw = s.measurement_bandwidth();
    if (!(bw > 0.0) || bw > s.waveform.sample_rate_hz)
        throw ConfigError("measurement.bandwidth_hz", "measurement bandwidth must be in (0, sample_rate_hz]");
    SiChannelModel ch = s.channel;
    std::size_t last = 0;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& ev = s.events[i];
        const std::string name = "events[" + std::to_string(i) + "]";
        if (ev.at_sample >= s.duration_samples)
            throw ConfigError(name + ".at_sample", name + ".at_sample must be < duration_samples");
        if (ev.at_sample < last) throw ConfigError(name + ".at_sample", "events must be sorted by at_sample");
        last = ev.at_sample;
        prefixed(name, [&] { ch = apply_event(ch, ev); });
    }
}

json parse_scenario_text(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t line = line_of(text, e.byte);
        throw ParseError(line, "parse error at line " + std::to_string(line) + ": " + e.what());
    }
}

Scenario scenario_from_json(const json& doc)
{
    ObjectReader r(doc, "");
    Scenario s;
    const auto version = r.integer("schema_version", 1);
    if (version != 1) throw ConfigError("schema_version", "schema_version must be 1");
    s.name = r.text("name");
    const auto seed = r.integer("seed", 1);
    if (seed < 0) throw ConfigError("seed", "seed must be ≥ 0");
    s.seed = static_cast<std::uint64_t>(seed);
    s.duration_samples = non_negative(r.integer("duration_samples"), "duration_samples");
    s.carrier_hz = r.real("carrier_hz", s.carrier_hz);
    if (const json* o = r.find("output_dir")) {
        if (!o->is_string()) throw ConfigError("output_dir", "output_dir must be a string");
        s.output_dir = o->get<std::string>();
    }
    s.waveform = parse_waveform(r.require("waveform"));
    s.waveform.seed = s.seed;
    s.pa = parse_pa(r.require("pa"), s.waveform.tx_power_dbfs);
    s.channel = parse_channel(r.require("channel"));
    s.rf = parse_rf(r.require("rf_canceller"));
    s.digital = parse_digital(r.require("digital_canceller"), s.compare_linear);
    if (const json* a = r.find("adc")) {
        ObjectReader ar(*a, "adc");
        s.adc.bits = static_cast<int>(ar.integer("bits", s.adc.bits));
        s.adc.full_scale = ar.real("full_scale", s.adc.full_scale);
        ar.finish();
    }
    if (const json* c = r.find("convergence")) {
        ObjectReader cr(*c, "convergence");
        s.convergence.window = non_negative(cr.integer("window", 2048), "convergence.window");
        s.convergence.epsilon_db = cr.real("epsilon_db", s.convergence.epsilon_db);
        cr.finish();
    }
    if (const json* m = r.find("measurement")) {
        ObjectReader mr(*m, "measurement");
        if (const json* b = mr.find("bandwidth_hz"); b && !b->is_null())
            s.measurement.bandwidth_hz = ObjectReader::as_real(*b, "measurement.bandwidth_hz");
        s.measurement.settle_margin = non_negative(
            mr.integer("settle_margin", static_cast<std::int64_t>(s.measurement.settle_margin)), "measurement.settle_margin");
        s.measurement.min_samples = non_negative(
            mr.integer("min_samples", static_cast<std::int64_t>(s.measurement.min_samples)), "measurement.min_samples");
        mr.finish();
    }
    if (const json* ev = r.find("events")) {
        if (!ev->is_array()) throw ConfigError("events", "events must be a list");
        for (std::size_t i = 0; i < ev->size(); ++i)
            s.events.push_back(parse_event((*ev)[i], "events[" + std::to_string(i) + "]"));
    }
    r.finish();
    s.convergence.max_samples = s.duration_samples;
    const std::size_t symbols = (s.duration_samples + symbol_length(s.waveform) - 1) / symbol_length(s.waveform);
    s.waveform.num_symbols = static_cast<int>(std::max<std::size_t>(1, symbols));
    validate(s);
    return s;
}

json load_scenario_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("path", "cannot open scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(load_scenario_json(path)); }

SiChannelModel apply_event(const SiChannelModel& ch, const ChannelEvent& ev)
{
    SiChannelModel out = ch;
    switch (ev.field) {
    case EventField::reflection_gain:
        if (!std::holds_alternative<cplx>(ev.value)) throw ConfigError("value", "reflection_gain needs a complex gain");
        out.reflection.gain = std::get<cplx>(ev.value);
        break;
    case EventField::reflection_delay:
        if (!std::holds_alternative<double>(ev.value)) throw ConfigError("value", "reflection_delay needs a real delay");
        out.reflection.delay_samples = std::get<double>(ev.value);
        break;
    case EventField::multipath_set:
        if (!std::holds_alternative<std::vector<PathComponent>>(ev.value))
            throw ConfigError("value", "multipath_set needs a component list");
        out.multipath = std::get<std::vector<PathComponent>>(ev.value);
        break;
    }
    validate(out);
    return out;
}

RunArtifacts run_scenario(const Scenario& s, const RunOptions& opts)
{
    validate(s);
    RunArtifacts art;
    RunMetrics& m = art.metrics;
    const std::size_t n = s.duration_samples;
    const std::size_t w = s.convergence.window;
    const double eps = s.convergence.epsilon_db;
    m.bandwidth_hz = s.measurement_bandwidth();
    m.sample_rate_hz = s.waveform.sample_rate_hz;

    log(opts, "waveform: " + std::to_string(n) + " samples at " + std::to_string(m.sample_rate_hz / 1e6) + " MHz");
    WaveformConfig wf = s.waveform;
    wf.seed = derive_seed(s.seed, 0);
    ComplexSignal tx = generate_frame(wf);
    tx.samples.resize(n);
    const ComplexSignal pa_out = apply_pa(tx, s.pa);

    std::vector<std::size_t> bounds{0};
    std::vector<SiChannelModel> channels{s.channel};
    for (const auto& ev : s.events) {
        bounds.push_back(ev.at_sample);
        channels.push_back(apply_event(channels.back(), ev));
    }
    bounds.push_back(n);
    ComplexSignal rx(std::vector<cplx>(n), pa_out.sample_rate_hz);
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        if (bounds[k] == bounds[k + 1]) continue;
        const auto seg = apply_si_channel(pa_out, channels[k]);
        std::copy(seg.samples.begin() + static_cast<std::ptrdiff_t>(bounds[k]),
                  seg.samples.begin() + static_cast<std::ptrdiff_t>(bounds[k + 1]),
                  rx.samples.begin() + static_cast<std::ptrdiff_t>(bounds[k]));
    }

    log(opts, "rf canceller: " + std::to_string(s.rf.tap_delays.size()) + " taps");
    const auto refs = tap_references(pa_out, s.rf.tap_delays);
    RfCancellerState rf_state = s.rf;
    auto rf = rf_cancel_run(rx, refs, rf_state);
    art.rf_trace = std::move(rf.trace);
    m.gear_changes = rf.gear_changes;
    m.rf_final_weights = rf_state.weights;

    const std::size_t stationary_end = s.events.empty() ? n : s.events.front().at_sample;
    const auto rf_wp = window_powers_db(rf.residual.samples, w);
    if (const auto i = settle_window(rf_wp, eps); i && (*i + 1) * w <= stationary_end) {
        m.rf_converged = true;
        m.rf_convergence_samples = (*i + 1) * w;
    }

    const double floor_db = s.channel.rx_noise_floor_dbfs;
    const std::uint64_t noise_seed = derive_seed(s.seed, 1);
    const ComplexSignal noisy = add_noise(rf.residual, floor_db, noise_seed);
    const ComplexSignal rx_digital = quantize(noisy, s.adc);
    m.clipped_samples = count_clipped(noisy, s.adc);

    DigitalCancellerConfig dcfg = s.digital;
    if (opts.digital_oracle) dcfg.mode = DcMode::oracle;
    const std::size_t span = static_cast<std::size_t>(dcfg.memory_pre + dcfg.memory_post);
    const bool digital_fits = n > span + dcfg.fit_block;
    const std::size_t margin = s.measurement.settle_margin;

    std::optional<CancelResult> dc, dc_lin;
    if (!digital_fits) {
        m.notes.push_back("duration shorter than the digital whitening block; digital stage skipped");
    } else if (dcfg.mode == DcMode::oracle) {
        if (m.rf_converged) {
            dcfg.measure_begin = std::min(*m.rf_convergence_samples + margin, stationary_end);
            dcfg.measure_end = stationary_end;
        }
        log(opts, "digital canceller: block-LS oracle, P=" + std::to_string(dcfg.P));
        try {
            dc = cancel(rx_digital, tx, dcfg);
        } catch (const ArgumentError& e) {
            m.notes.push_back(std::string("digital oracle skipped: ") + e.what());
        }
    } else {
        log(opts, "digital canceller: LMS, P=" + std::to_string(dcfg.P));
        dc = cancel(rx_digital, tx, dcfg);
    }
    if (dc && s.compare_linear && dcfg.P != 1) {
        DigitalCancellerConfig lin = dcfg;
        lin.P = 1;
        log(opts, "digital canceller: linear comparison, P=1");
        try {
            dc_lin = cancel(rx_digital, tx, lin);
        } catch (const ArgumentError& e) {
            m.notes.push_back(std::string("linear comparison skipped: ") + e.what());
        }
    }

    const ComplexSignal digital = dc ? dc->residual : rx_digital;
    if (dc) {
        m.dc_raw_condition = dc->report.raw_condition;
        m.dc_ortho_condition = dc->report.ortho_condition;
        art.dc_coeffs = dc->original_coefficients();
        if (m.rf_converged) {
            const auto dc_wp = window_powers_db(digital.samples, w);
            const std::size_t first = *m.rf_convergence_samples / w - 1;
            if (dcfg.mode == DcMode::oracle) {
                m.digital_converged = true;
                m.digital_convergence_samples = *m.rf_convergence_samples;
            } else if (const auto j = settle_window(dc_wp, eps, first); j && (*j + 1) * w <= stationary_end) {
                m.digital_converged = true;
                m.digital_convergence_samples = (*j + 1) * w;
            }
        }
    }

    if (m.rf_converged && m.digital_converged) {
        m.measure_begin = std::max(*m.rf_convergence_samples, *m.digital_convergence_samples) + margin;
        m.measure_end = stationary_end;
        m.converged = m.measure_end > m.measure_begin && m.measure_end - m.measure_begin >= s.measurement.min_samples;
    }
    if (!m.converged) {
        m.notes.push_back("not converged: no post-convergence window of at least " +
                          std::to_string(s.measurement.min_samples) + " samples");
        m.measure_begin = 0;
        m.measure_end = stationary_end;
    }

    const std::size_t mb = m.measure_begin, me = m.measure_end;
    const ComplexSignal noise_only = add_noise(ComplexSignal(std::vector<cplx>(n), m.sample_rate_hz), floor_db, noise_seed);
    std::vector<std::pair<std::string, const ComplexSignal*>> stages{
        {"tx", &tx},
        {"pa_output", &pa_out},
        {"canceller_input", &rx},
        {"rf_residual", &rf.residual},
        {"digital_residual", &digital},
        {"noise", &noise_only},
    };
    if (dc_lin) stages.emplace_back("digital_residual_linear", &dc_lin->residual);
    std::vector<double> powers;
    for (const auto& [name, sig] : stages) {
        const auto seg = slice(*sig, mb, me);
        Psd psd = default_psd(seg);
        powers.push_back(band_power(psd, m.bandwidth_hz));
        art.psds.emplace_back(name, std::move(psd));
    }
    m.tx_db = powers[0];
    m.pa_output_db = powers[1];
    m.canceller_input_db = powers[2];
    m.rf_residual_db = powers[3];
    m.digital_residual_db = powers[4];
    m.noise_db = powers[5];
    if (dc_lin) m.digital_linear_residual_db = powers[6];
    m.noise_floor_in_band_db = floor_db + 10.0 * std::log10(m.bandwidth_hz / m.sample_rate_hz);

    const auto rx_win = std::span<const cplx>(rx.samples).subspan(mb, me - mb);
    m.canceller_input_time_db = to_db(mean_power(rx_win));
    m.rf_residual_time_db = to_db(mean_power(std::span<const cplx>(rf.residual.samples).subspan(mb, me - mb)));
    m.clipped_in_measurement = count_clipped(noisy, s.adc, mb, me);
    if (me - mb > refs.size()) {
        const auto ls = rf_block_ls(rx, refs, mb, me);
        m.rf_ls_residual_time_db = ls.residual_power_db;
        m.rf_ls_weights = ls.weights;
    }

    for (std::size_t k = 0; k < s.events.size(); ++k) {
        EventMetrics em;
        const auto& ev = s.events[k];
        em.at_sample = ev.at_sample;
        em.field = ev.field;
        const std::size_t t = ev.at_sample;
        const std::size_t next = k + 1 < s.events.size() ? s.events[k + 1].at_sample : n;
        const std::size_t pre_end = t / w;
        const std::size_t after = (t + w - 1) / w;
        const std::size_t next_w = std::min(next / w, rf_wp.size());
        if (m.rf_converged) {
            const std::size_t conv_w = *m.rf_convergence_samples / w;
            const std::size_t pre_begin = std::max(conv_w, pre_end >= 16 ? pre_end - 16 : 0);
            if (pre_end > pre_begin) em.pre_event_residual_db = mean_db_of_windows(rf_wp, pre_begin, pre_end);
        }
        if (const auto j = settle_window(rf_wp, eps, after); j && *j < next_w) {
            em.samples_to_reconverge = (*j + 1) * w - t;
            if (em.pre_event_residual_db) {
                double peak = -400.0;
                for (std::size_t i = after; i <= *j; ++i) peak = std::max(peak, rf_wp[i]);
                em.spike_db = peak - *em.pre_event_residual_db;
            }
            const std::size_t post_begin = std::min(*j + 1 + margin / w, next_w);
            if (next_w > post_begin) em.post_event_residual_db = mean_db_of_windows(rf_wp, post_begin, next_w);
        }
        m.events.push_back(em);
    }

    // Summary document.
    json sum;
    sum["schema_version"] = summary_schema_version;
    sum["scenario"] = s.name;
    sum["seed"] = s.seed;
    sum["duration_samples"] = n;
    sum["sample_rate_hz"] = m.sample_rate_hz;
    sum["measurement_bandwidth_hz"] = m.bandwidth_hz;
    sum["metadata"] = {
        {"carrier_hz", s.carrier_hz},
        {"power_unit", "dBFS (0 dBFS = unit mean power)"},
        {"dbm_mapping", "notional: antenna power +6..+8 dBm; no absolute power is asserted"},
        {"numerology", "stand-in LTE-like CP-OFDM"},
        {"waveform",
         {{"bandwidth_hz", s.waveform.bandwidth_hz},
          {"num_subcarriers", s.waveform.num_subcarriers},
          {"active_subcarriers", s.waveform.active_subcarriers},
          {"cp_len", s.waveform.cp_len},
          {"constellation", to_string(s.waveform.constellation)},
          {"tx_power_dbfs", s.waveform.tx_power_dbfs},
          {"crest_factor_db", s.waveform.crest_factor_db},
          {"papr_db", round4(measure_papr(tx))}}},
    };
    sum["status"] = {{"complete", true}, {"converged", m.converged}, {"exit_code", m.converged ? 0 : 4},
                     {"notes", m.notes}};
    sum["measurement"] = {{"start_sample", mb}, {"end_sample", me}};

    json st = json::array();
    const std::vector<std::pair<std::string, double>> chain{{"pa_output", m.pa_output_db},
                                                            {"canceller_input", m.canceller_input_db},
                                                            {"rf_residual", m.rf_residual_db},
                                                            {"digital_residual", m.digital_residual_db}};
    for (std::size_t i = 0; i < chain.size(); ++i)
        st.push_back({{"name", chain[i].first},
                      {"band_power_dbfs", round4(chain[i].second)},
                      {"suppression_vs_prev_db", i == 0 ? 0.0 : round4(chain[i - 1].second - chain[i].second)}});
    sum["stages"] = st;
    if (m.converged) {
        sum["suppression_db"] = {{"passive", round4(m.passive_suppression_db())},
                                 {"rf", round4(m.rf_suppression_db())},
                                 {"passive_plus_rf", round4(m.pa_output_db - m.rf_residual_db)},
                                 {"digital", round4(m.digital_suppression_db())},
                                 {"total", round4(m.total_suppression_db())}};
    } else {
        sum["suppression_db"] = nullptr;
    }
    sum["reference"] = {{"rf_hardware_db", m.bandwidth_hz > 40e6 ? 40.0 : 50.0},
                        {"rf_threshold_db", 35.0},
                        {"rf_slack_db", m.bandwidth_hz > 40e6 ? 5.0 : 15.0},
                        {"linear_gap_threshold_db", 8.0},
                        {"noise_floor_window_db", 3.0}};

    json gear = json::array();
    for (const auto& g : m.gear_changes) gear.push_back({{"sample_index", g.sample_index}, {"tracking", g.tracking}});
    sum["rf_canceller"] = {{"taps", s.rf.tap_delays},
                           {"converged", m.rf_converged},
                           {"samples_to_convergence", opt_json(m.rf_convergence_samples)},
                           {"final_weights", complex_list(m.rf_final_weights)},
                           {"ls_weights", complex_list(m.rf_ls_weights)},
                           {"residual_time_dbfs", round4(m.rf_residual_time_db)},
                           {"ls_residual_time_dbfs", round4(m.rf_ls_residual_time_db)},
                           {"input_time_dbfs", round4(m.canceller_input_time_db)},
                           {"gear_changes", gear}};
    json dj = {{"P", dcfg.P},
               {"memory_pre", dcfg.memory_pre},
               {"memory_post", dcfg.memory_post},
               {"mode", to_string(dcfg.mode)},
               {"active", dc.has_value()},
               {"converged", m.digital_converged},
               {"samples_to_convergence", opt_json(m.digital_convergence_samples)},
               {"raw_condition_number", m.dc_raw_condition},
               {"ortho_condition_number", m.dc_ortho_condition}};
    if (m.digital_linear_residual_db) {
        dj["linear_comparison"] = {{"P", 1},
                                   {"residual_dbfs", round4(*m.digital_linear_residual_db)},
                                   {"total_suppression_db", round4(m.pa_output_db - *m.digital_linear_residual_db)},
                                   {"gain_of_nonlinear_db", round4(*m.digital_linear_residual_db - m.digital_residual_db)}};
    }
    sum["digital_canceller"] = dj;
    sum["noise"] = {{"rx_noise_floor_dbfs", std::isfinite(floor_db) ? json(floor_db) : json(nullptr)},
                    {"in_band_floor_dbfs", std::isfinite(floor_db) ? json(round4(m.noise_floor_in_band_db)) : json(nullptr)},
                    {"measured_in_band_dbfs", round4(m.noise_db)},
                    {"residual_above_floor_db",
                     std::isfinite(floor_db) ? json(round4(m.digital_residual_db - m.noise_floor_in_band_db)) : json(nullptr)}};
    sum["adc"] = {{"bits", s.adc.bits},
                  {"full_scale", s.adc.full_scale},
                  {"clipped_samples", m.clipped_samples},
                  {"clipped_samples_in_measurement", m.clipped_in_measurement}};
    json evs = json::array();
    for (const auto& em : m.events)
        evs.push_back({{"at_sample", em.at_sample},
                       {"field", to_string(em.field)},
                       {"pre_event_residual_dbfs", opt_json(em.pre_event_residual_db)},
                       {"spike_db", opt_json(em.spike_db)},
                       {"samples_to_reconverge", opt_json(em.samples_to_reconverge)},
                       {"post_event_residual_dbfs", opt_json(em.post_event_residual_db)}});
    sum["events"] = evs;
    art.summary = std::move(sum);
    log(opts, "done");
    return art;
}

void write_artifacts(const RunArtifacts& a, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("summary.json");
        f << a.summary.dump(2) << '\n';
    }
    for (const auto& [name, psd] : a.psds) {
        auto f = open("psd_" + name + ".csv");
        psd.write_csv(f);
    }
    {
        auto f = open("rf_weights.csv");
        a.rf_trace.write_csv(f);
    }
    {
        auto f = open("dc_coeffs.csv");
        f << "order,lag,re,im\n";
        std::ostringstream line;
        line.precision(17);
        for (const auto& c : a.dc_coeffs) {
            line.str("");
            line << c.label.order << ',' << c.label.lag << ',' << c.value.real() << ',' << c.value.imag() << '\n';
            f << line.str();
        }
    }
}

json failure_summary(const Scenario& s, const std::string& error, int exit_code)
{
    json sum;
    sum["schema_version"] = summary_schema_version;
    sum["scenario"] = s.name;
    sum["seed"] = s.seed;
    sum["status"] = {{"complete", false}, {"converged", false}, {"exit_code", exit_code}, {"error", error}};
    return sum;
}

std::string render_report(const json& sum)
{
    std::ostringstream os;
    auto num = [](const json& v, int prec = 2) {
        if (!v.is_number()) return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(prec) << v.get<double>();
        return s.str();
    };
    auto get = [](const json& j, const char* key) -> const json& {
        static const json null_value;
        return j.is_object() && j.contains(key) ? j.at(key) : null_value;
    };

    os << "scenario " << get(sum, "scenario").get<std::string>() << "  seed " << get(sum, "seed").dump() << '\n';
    const json& status = get(sum, "status");
    os << "status   complete=" << get(status, "complete").dump() << " converged=" << get(status, "converged").dump()
       << " exit_code=" << get(status, "exit_code").dump() << '\n';
    if (status.contains("error")) os << "error    " << status.at("error").get<std::string>() << '\n';
    if (!sum.contains("stages")) return os.str();

    os << "\nmeasurement samples [" << get(get(sum, "measurement"), "start_sample").dump() << ", "
       << get(get(sum, "measurement"), "end_sample").dump() << "), bandwidth "
       << num(json(get(sum, "measurement_bandwidth_hz").get<double>() / 1e6), 1) << " MHz\n\n";
    os << std::left << std::setw(20) << "stage" << std::right << std::setw(14) << "power dBFS" << std::setw(14)
       << "supp dB" << '\n';
    for (const auto& st : sum.at("stages"))
        os << std::left << std::setw(20) << st.at("name").get<std::string>() << std::right << std::setw(14)
           << num(st.at("band_power_dbfs")) << std::setw(14) << num(st.at("suppression_vs_prev_db")) << '\n';
    const json& supp = get(sum, "suppression_db");
    if (supp.is_object()) {
        os << "\nsuppression dB: passive " << num(supp.at("passive")) << ", rf " << num(supp.at("rf"))
           << ", passive+rf " << num(supp.at("passive_plus_rf")) << ", digital " << num(supp.at("digital"))
           << ", total " << num(supp.at("total")) << '\n';
    }
    const json& rf = get(sum, "rf_canceller");
    os << "rf canceller: converged " << get(rf, "converged").dump() << " after "
       << get(rf, "samples_to_convergence").dump() << " samples; residual " << num(get(rf, "residual_time_dbfs"))
       << " dBFS vs LS " << num(get(rf, "ls_residual_time_dbfs")) << " dBFS\n";
    const json& dc = get(sum, "digital_canceller");
    os << "digital canceller: P=" << get(dc, "P").dump() << " mode " << get(dc, "mode").dump() << " converged "
       << get(dc, "converged").dump() << "; gram condition raw " << num(get(dc, "raw_condition_number"), 1)
       << ", orthogonalized " << num(get(dc, "ortho_condition_number"), 6) << '\n';
    if (dc.contains("linear_comparison"))
        os << "  linear (P=1) residual " << num(dc.at("linear_comparison").at("residual_dbfs"))
           << " dBFS; nonlinear gain " << num(dc.at("linear_comparison").at("gain_of_nonlinear_db")) << " dB\n";
    const json& noise = get(sum, "noise");
    os << "noise: in-band floor " << num(get(noise, "in_band_floor_dbfs")) << " dBFS, residual above floor "
       << num(get(noise, "residual_above_floor_db")) << " dB\n";
    const json& adc = get(sum, "adc");
    os << "adc: " << get(adc, "bits").dump() << " bits, clipped " << get(adc, "clipped_samples").dump()
       << " samples (" << get(adc, "clipped_samples_in_measurement").dump() << " in window)\n";
    for (const auto& ev : get(sum, "events"))
        os << "event @" << ev.at("at_sample").dump() << " " << ev.at("field").get<std::string>() << ": pre "
           << num(ev.at("pre_event_residual_dbfs")) << " dBFS, spike " << num(ev.at("spike_db")) << " dB, reconverged in "
           << ev.at("samples_to_reconverge").dump() << " samples, post " << num(ev.at("post_event_residual_dbfs"))
           << " dBFS\n";
    return os.str();
}

} // namespace sicsim
