#include "schieber/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#ifndef SCHIEBER_VERSION
#define SCHIEBER_VERSION "unknown"
#endif

namespace schieber {

using nlohmann::json;

namespace {

constexpr double kYearSeconds = 365.25 * 86400.0;

// Reads known keys from one JSON object and rejects the rest.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw ConfigError("config: " + (path.empty() ? std::string("<root>") : path) + ": " + what);
    }

    [[nodiscard]] std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json* find(const std::string& key) {
        used_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& dst) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(child(key), "expected a number");
            dst = v->get<double>();
        }
    }

    void integer(const std::string& key, int& dst) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(child(key), "expected an integer");
            dst = v->get<int>();
        }
    }

    void unsigned64(const std::string& key, std::uint64_t& dst) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
                fail(child(key), "expected a non-negative integer");
            }
            dst = v->get<std::uint64_t>();
        }
    }

    void boolean(const std::string& key, bool& dst) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(child(key), "expected true or false");
            dst = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& dst) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(child(key), "expected a string");
            dst = v->get<std::string>();
        }
    }

    void channel(const std::string& key, ChannelKind& dst) {
        std::string s;
        if (find(key) == nullptr) return;
        string(key, s);
        if (s == "los") {
            dst = ChannelKind::LineOfSight;
        } else if (s == "rayleigh") {
            dst = ChannelKind::Rayleigh;
        } else {
            fail(child(key), "expected \"los\" or \"rayleigh\"");
        }
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (used_.count(it.key()) == 0) fail(child(it.key()), "unknown key");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

std::string channel_name(ChannelKind k) { return k == ChannelKind::LineOfSight ? "los" : "rayleigh"; }

Eigen::VectorXcd attacker_channel(ChannelKind kind, const ArrayGeometry& array, Rng& rng) {
    if (kind == ChannelKind::LineOfSight) {
        return steering_vector(array, random_hemisphere_direction(rng));
    }
    Eigen::VectorXcd g(array.antennas());
    for (Eigen::Index b = 0; b < g.size(); ++b) g[b] = complex_normal(rng, 1.0);
    return g;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& path, const std::string& what) { Fields::fail(path, what); };
    if (trial_count < 1) fail("trial_count", "must be >= 1");
    if (antennas < 2) fail("receiver.antennas", "must be >= 2");
    if (!ring_radius_auto && !(ring_radius_m > 0.0)) fail("receiver.ring_radius_m", "must be positive");
    if (!std::isfinite(snr_db)) fail("snr_db", "must be finite");
    if (sim_ms < 7 || sim_ms < receiver.music_window + 3) fail("sim_ms", "window too short");
    if (modes.empty()) fail("modes", "must list at least one mode");
    if (!(max_clock_offset_s >= 0.0)) fail("max_clock_offset_s", "must be >= 0");
    if (!(spoof_range_min_m > 0.0) || !(spoof_range_max_m >= spoof_range_min_m)) {
        fail("spoof_range_m", "need 0 < min <= max");
    }
    for (std::size_t i = 0; i < jammers.size(); ++i) {
        const auto& j = jammers[i];
        const std::string p = "jammers[" + std::to_string(i) + "]";
        if (j.count < 0) fail(p + ".count", "must be >= 0");
        JammerConfig cfg{j.antennas, j.jsr_db, j.channel, j.active_antennas, j.switch_probability};
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            fail(p, e.what());
        }
    }
    for (std::size_t i = 0; i < spoofers.size(); ++i) {
        const auto& s = spoofers[i];
        const std::string p = "spoofers[" + std::to_string(i) + "]";
        if (s.count < 0) fail(p + ".count", "must be >= 0");
        if (s.spoofed_count < 1) fail(p + ".spoofed_count", "must be >= 1");
    }
    try {
        receiver.validate(antennas);
    } catch (const std::invalid_argument& e) {
        fail("thresholds", e.what());
    }
}

ScenarioConfig parse_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    Fields root(doc, "");
    root.string("name", cfg.name);
    root.number("snr_db", cfg.snr_db);
    root.integer("trial_count", cfg.trial_count);
    root.unsigned64("master_seed", cfg.master_seed);
    root.integer("sim_ms", cfg.sim_ms);
    root.number("max_clock_offset_s", cfg.max_clock_offset_s);
    int data_step = static_cast<int>(cfg.receiver.data.step_index);
    root.integer("data_step", data_step);
    cfg.receiver.data.step_index = data_step;

    if (const json* modes = root.find("modes")) {
        if (!modes->is_array()) Fields::fail("modes", "expected an array of mode names");
        cfg.modes.clear();
        for (std::size_t i = 0; i < modes->size(); ++i) {
            const auto& m = (*modes)[i];
            const std::string p = "modes[" + std::to_string(i) + "]";
            if (!m.is_string()) Fields::fail(p, "expected a string");
            try {
                cfg.modes.push_back(parse_mode(m.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                Fields::fail(p, e.what());
            }
        }
    }
    if (const json* rx = root.find("receiver")) {
        Fields f(*rx, "receiver");
        f.integer("antennas", cfg.antennas);
        f.boolean("ring_radius_auto", cfg.ring_radius_auto);
        f.number("ring_radius_m", cfg.ring_radius_m);
        f.finish();
    }
    if (const json* sr = root.find("spoof_range_m")) {
        if (!sr->is_array() || sr->size() != 2 || !(*sr)[0].is_number() || !(*sr)[1].is_number()) {
            Fields::fail("spoof_range_m", "expected [min, max] in meters");
        }
        cfg.spoof_range_min_m = (*sr)[0].get<double>();
        cfg.spoof_range_max_m = (*sr)[1].get<double>();
    }
    if (const json* js = root.find("jammers")) {
        if (!js->is_array()) Fields::fail("jammers", "expected an array");
        for (std::size_t i = 0; i < js->size(); ++i) {
            Fields f((*js)[i], "jammers[" + std::to_string(i) + "]");
            JammerSpec spec;
            f.integer("count", spec.count);
            f.integer("antennas", spec.antennas);
            f.number("jsr_db", spec.jsr_db);
            f.channel("channel", spec.channel);
            f.integer("active_antennas", spec.active_antennas);
            f.number("switch_probability", spec.switch_probability);
            f.finish();
            cfg.jammers.push_back(spec);
        }
    }
    if (const json* ss = root.find("spoofers")) {
        if (!ss->is_array()) Fields::fail("spoofers", "expected an array");
        for (std::size_t i = 0; i < ss->size(); ++i) {
            Fields f((*ss)[i], "spoofers[" + std::to_string(i) + "]");
            SpooferSpec spec;
            f.integer("count", spec.count);
            f.integer("spoofed_count", spec.spoofed_count);
            f.number("ssr_db", spec.ssr_db);
            f.channel("channel", spec.channel);
            f.finish();
            cfg.spoofers.push_back(spec);
        }
    }
    if (const json* th = root.find("thresholds")) {
        Fields f(*th, "thresholds");
        auto& r = cfg.receiver;
        f.number("tau", r.acquisition.baseline_threshold);
        f.number("tau_j", r.acquisition.jass_threshold);
        f.integer("nulled_dimensions", r.acquisition.nulled_dimensions);
        f.number("tau_m", r.music_threshold);
        f.integer("music_window", r.music_window);
        f.number("rho_min_m", r.bounds.min_m);
        f.number("rho_max_m", r.bounds.max_m);
        f.number("irls_sigma_m", r.irls_sigma_m);
        f.integer("max_iterations", r.max_iterations);
        f.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

namespace {

json scenario_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["snr_db"] = c.snr_db;
    j["trial_count"] = c.trial_count;
    j["master_seed"] = c.master_seed;
    j["sim_ms"] = c.sim_ms;
    j["max_clock_offset_s"] = c.max_clock_offset_s;
    j["data_step"] = c.receiver.data.step_index;
    j["spoof_range_m"] = {c.spoof_range_min_m, c.spoof_range_max_m};
    j["modes"] = json::array();
    for (Mode m : c.modes) j["modes"].push_back(to_string(m));
    j["receiver"] = {{"antennas", c.antennas}, {"ring_radius_auto", c.ring_radius_auto},
                     {"ring_radius_m", c.ring_radius_m}};
    j["jammers"] = json::array();
    for (const auto& s : c.jammers) {
        j["jammers"].push_back({{"count", s.count}, {"antennas", s.antennas}, {"jsr_db", s.jsr_db},
                                {"channel", channel_name(s.channel)},
                                {"active_antennas", s.active_antennas},
                                {"switch_probability", s.switch_probability}});
    }
    j["spoofers"] = json::array();
    for (const auto& s : c.spoofers) {
        j["spoofers"].push_back({{"count", s.count}, {"spoofed_count", s.spoofed_count},
                                 {"ssr_db", s.ssr_db}, {"channel", channel_name(s.channel)}});
    }
    const auto& r = c.receiver;
    j["thresholds"] = {{"tau", r.acquisition.baseline_threshold},
                       {"tau_j", r.acquisition.jass_threshold},
                       {"nulled_dimensions", r.acquisition.nulled_dimensions},
                       {"tau_m", r.music_threshold},
                       {"music_window", r.music_window},
                       {"rho_min_m", r.bounds.min_m},
                       {"rho_max_m", r.bounds.max_m},
                       {"irls_sigma_m", r.irls_sigma_m},
                       {"max_iterations", r.max_iterations}};
    return j;
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& config, int indent) {
    return scenario_json(config).dump(indent);
}

ArrayGeometry receiver_array(const ScenarioConfig& config) {
    if (config.ring_radius_auto) return ring_array(config.antennas);
    const double spacing = 2.0 * config.ring_radius_m * std::sin(kPi / config.antennas);
    return ring_array(config.antennas, spacing / kWavelength);
}

LocalDirection random_hemisphere_direction(Rng& rng) {
    LocalDirection d;
    d.elevation = std::asin(uniform(rng, 0.0, 1.0));
    d.azimuth = uniform(rng, -kPi, kPi);
    return d;
}

Scene draw_scene(const ScenarioConfig& config, std::size_t trial) {
    Scene scene;
    scene.seed = mix_seed(config.master_seed, trial);
    Rng rng(mix_seed(scene.seed, 10));

    scene.almanac = nominal_almanac();
    scene.epoch_s = uniform(rng, 0.0, kYearSeconds);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d u;
    do {
        u << normal(rng), normal(rng), normal(rng);
    } while (u.norm() < 1e-12);
    scene.truth.position = kEarthRadius * u.normalized();
    scene.truth.orientation = enu_orientation(scene.truth.position, uniform(rng, 0.0, 2.0 * kPi));
    scene.truth.clock_offset_s = uniform(rng, 0.0, config.max_clock_offset_s);
    scene.array = receiver_array(config);
    scene.snr_db = config.snr_db;
    scene.code_periods = static_cast<std::size_t>(config.sim_ms);
    scene.data = config.receiver.data;

    for (const auto& spec : config.jammers) {
        for (int k = 0; k < spec.count; ++k) {
            JammerSetup js;
            js.config = {spec.antennas, spec.jsr_db, spec.channel, spec.active_antennas, spec.switch_probability};
            js.channels.resize(scene.array.antennas(), spec.antennas);
            for (int j = 0; j < spec.antennas; ++j) {
                js.channels.col(j) = attacker_channel(spec.channel, scene.array, rng);
            }
            scene.jammers.push_back(std::move(js));
        }
    }

    std::vector<int> targets;
    for (const auto& s : propagate(scene.almanac, scene.epoch_s)) {
        if (visible(scene.truth.position, s.position)) targets.push_back(s.prn);
    }
    std::shuffle(targets.begin(), targets.end(), rng);
    std::size_t next_target = 0;
    for (const auto& spec : config.spoofers) {
        for (int k = 0; k < spec.count; ++k) {
            SpooferSetup sp;
            sp.config.ssr_db = spec.ssr_db;
            sp.config.channel = spec.channel;
            for (int m = 0; m < spec.spoofed_count && next_target < targets.size(); ++m) {
                SpoofedSignal sig;
                sig.prn = targets[next_target++];
                sig.delay_s = uniform(rng, config.spoof_range_min_m, config.spoof_range_max_m) / kSpeedOfLight +
                              scene.truth.clock_offset_s;
                sig.doppler_hz = uniform(rng, -kDopplerMaxHz, kDopplerMaxHz);
                sp.config.signals.push_back(sig);
            }
            sp.channel = attacker_channel(spec.channel, scene.array, rng);
            if (!sp.config.signals.empty()) scene.spoofers.push_back(std::move(sp));
        }
    }
    return scene;
}

ScenarioResult run_scenario(const ScenarioConfig& config, int workers, const ProgressFn& progress) {
    config.validate();
    ScenarioResult result;
    result.config = config;
    result.modes = config.modes;
    const auto n = static_cast<std::size_t>(config.trial_count);
    result.trials.assign(result.modes.size(), std::vector<TrialResult>(n));
    const SteeringTable table(receiver_array(config));

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex mutex;
    auto work = [&] {
        for (std::size_t t = next++; t < n; t = next++) {
            const Scene scene = draw_scene(config, t);
            std::vector<TrialResult> rows;
            try {
                rows = run_trial_modes(scene, result.modes, config.receiver, &table);
            } catch (const std::exception& e) {
                rows.clear();
                for (Mode m : result.modes) {
                    TrialResult r;
                    r.mode = m;
                    r.seed = scene.seed;
                    r.truth = scene.truth.position;
                    r.failure = std::string("trial error: ") + e.what();
                    r.error_m = std::numeric_limits<double>::infinity();
                    rows.push_back(r);
                }
            }
            std::lock_guard<std::mutex> lock(mutex);
            for (std::size_t m = 0; m < rows.size(); ++m) result.trials[m][t] = std::move(rows[m]);
            ++done;
            if (progress) progress(done, n);
        }
    };
    const int threads = std::max(1, std::min<int>(workers, config.trial_count));
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return result;
}

double CdfTable::fraction_at(double x) const {
    if (trials == 0) return 0.0;
    const auto count = std::upper_bound(errors.begin(), errors.end(), x) - errors.begin();
    return static_cast<double>(count) / static_cast<double>(trials);
}

double CdfTable::quantile(double q) const {
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (static_cast<double>(i + 1) / static_cast<double>(trials) >= q) return errors[i];
    }
    return std::numeric_limits<double>::infinity();
}

CdfTable make_cdf(const std::vector<TrialResult>& results, Mode mode) {
    CdfTable cdf;
    cdf.mode = mode;
    for (const auto& r : results) {
        if (r.mode != mode) continue;
        cdf.errors.push_back(std::isnan(r.error_m) ? std::numeric_limits<double>::infinity() : r.error_m);
    }
    cdf.trials = cdf.errors.size();
    std::sort(cdf.errors.begin(), cdf.errors.end());
    return cdf;
}

RateEstimate wilson_rate(std::size_t successes, std::size_t trials, double z) {
    RateEstimate r;
    r.successes = successes;
    r.trials = trials;
    if (trials == 0) return r;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    r.rate = p;
    r.lower = std::max(0.0, centre - half);
    r.upper = std::min(1.0, centre + half);
    return r;
}

RateEstimate success_rate(const std::vector<TrialResult>& results, double threshold_m) {
    const auto k = static_cast<std::size_t>(std::count_if(
        results.begin(), results.end(), [&](const TrialResult& r) { return r.error_m <= threshold_m; }));
    return wilson_rate(k, results.size());
}

std::string version_string() { return SCHIEBER_VERSION; }

void write_trials_csv(std::ostream& out, const ScenarioResult& result) {
    out << "trial,mode,seed,true_x_m,true_y_m,true_z_m,est_x_m,est_y_m,est_z_m,clock_bias_m,"
           "error_m,acquired,ranged,screened,clique,iterations,converged,used_prns,failure\n";
    const std::size_t n = result.trials.empty() ? 0 : result.trials.front().size();
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t m = 0; m < result.modes.size(); ++m) {
            const auto& r = result.trials[m][t];
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const EcefVector est = r.fix ? r.fix->position : EcefVector::Constant(nan);
            std::string prns;
            for (std::size_t i = 0; i < r.used_prns.size(); ++i) {
                prns += (i ? ";" : "") + std::to_string(r.used_prns[i]);
            }
            std::string failure = r.failure;
            std::replace(failure.begin(), failure.end(), '"', '\'');
            out << t << ',' << to_string(r.mode) << ',' << r.seed << ',' << format_double(r.truth.x()) << ','
                << format_double(r.truth.y()) << ',' << format_double(r.truth.z()) << ','
                << format_double(est.x()) << ',' << format_double(est.y()) << ',' << format_double(est.z())
                << ',' << format_double(r.fix ? r.fix->clock_bias_m : nan) << ','
                << format_double(r.error_m) << ',' << r.acquired << ',' << r.ranged << ',' << r.screened
                << ',' << r.clique << ',' << (r.fix ? r.fix->iterations : 0) << ','
                << (r.fix && r.fix->converged ? 1 : 0) << ',' << prns << ",\"" << failure << "\"\n";
        }
    }
}

void write_cdf_csv(std::ostream& out, const CdfTable& cdf) {
    out << "error_m,fraction\n";
    for (std::size_t i = 0; i < cdf.errors.size(); ++i) {
        const double e = cdf.errors[i];
        if (!std::isfinite(e)) break;
        if (i + 1 < cdf.errors.size() && cdf.errors[i + 1] == e) continue;  // keep the right limit
        out << format_double(e) << ',' << format_double(static_cast<double>(i + 1) / static_cast<double>(cdf.trials))
            << '\n';
    }
}

std::string summary_json(const ScenarioResult& result) {
    json j;
    j["name"] = result.config.name;
    j["version"] = version_string();
    j["trials"] = result.config.trial_count;
    j["success_threshold_m"] = kSuccessThresholdM;
    j["modes"] = json::object();
    for (std::size_t m = 0; m < result.modes.size(); ++m) {
        const auto& rows = result.trials[m];
        const auto cdf = make_cdf(rows, result.modes[m]);
        const auto rate = success_rate(rows);
        json mj;
        mj["success"] = {{"successes", rate.successes}, {"trials", rate.trials}, {"rate", rate.rate},
                         {"wilson95_lower", rate.lower}, {"wilson95_upper", rate.upper}};
        mj["finite_fraction"] = cdf.fraction_at(std::numeric_limits<double>::max());
        mj["median_error_m"] = number_or_null(cdf.quantile(0.5));
        json q = json::object();
        for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) {
            std::ostringstream key;
            key << p;
            q[key.str()] = number_or_null(cdf.quantile(p));
        }
        mj["quantiles_m"] = q;
        double acquired = 0.0, clique = 0.0;
        for (const auto& r : rows) {
            acquired += r.acquired;
            clique += r.clique;
        }
        const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
        mj["mean_acquired"] = acquired / n;
        mj["mean_used"] = clique / n;
        j["modes"][to_string(result.modes[m])] = mj;
    }
    j["config"] = scenario_json(result.config);
    return j.dump(2) + "\n";
}

void emit(const ScenarioResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    auto write = [](const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        body(out);
        out.flush();
        if (!out) throw IoError("failed writing " + path.string());
    };
    write(out_dir / "trials.csv", [&](std::ostream& o) { write_trials_csv(o, result); });
    for (std::size_t m = 0; m < result.modes.size(); ++m) {
        const auto cdf = make_cdf(result.trials[m], result.modes[m]);
        write(out_dir / ("cdf_" + to_string(result.modes[m]) + ".csv"), [&](std::ostream& o) { write_cdf_csv(o, cdf); });
    }
    write(out_dir / "summary.json", [&](std::ostream& o) { o << summary_json(result); });
}

}  // namespace schieber
