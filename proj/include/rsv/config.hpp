#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <tuple>
#include <string>

#include <json.hpp>

#include "criteria.hpp"
#include "dynamics.hpp"
#include "profile.hpp"

namespace rsv {

enum class InitialKind { constant, simple_wave, two_bump, packet, file };
enum class Mode { rigorous, empirical };
enum class WrapPolicy { reject, periodic };

struct InitialSpec {
    InitialKind kind = InitialKind::constant;
    // constant
    double eta = 0;
    double u = 0;
    // simple_wave
    double delta = 0.1;
    // two_bump
    TwoBumpSpec two_bump;
    // packet: right-moving linear wave eta = amplitude * bump((x - center L)/(width L))
    double amplitude = 1e-3;
    double width = 0.1;
    double center = 0.25;
    // file: CSV with eta and u columns
    std::string path;

    friend bool operator==(const InitialSpec& a, const InitialSpec& b)
    {
        auto tb = [](const TwoBumpSpec& t) {
            return std::tie(t.depth_amplitude, t.depth_width, t.depth_center, t.velocity_amplitude,
                            t.velocity_width, t.velocity_center);
        };
        return a.kind == b.kind && a.eta == b.eta && a.u == b.u && a.delta == b.delta
               && tb(a.two_bump) == tb(b.two_bump) && a.amplitude == b.amplitude
               && a.width == b.width && a.center == b.center && a.path == b.path;
    }
};

struct RunConfig {
    int schema = 1;
    Params params;
    std::size_t n_points = 512;
    double length = 1.0;
    // For simple waves: L = length_per_width * delta^3.
    std::optional<double> length_per_width;
    InitialSpec initial;
    // Physical velocity of the computational frame, subtracted from the
    // initial data. Unset means sqrt(g h*) for simple waves and 0 otherwise.
    std::optional<double> frame_speed;
    double horizon = 1.0;
    std::size_t snapshot_stride = 100;
    double cfl_number = 0.4;
    Mode mode = Mode::empirical;
    std::uint64_t seed = 0;
    std::string output_dir = "rsv_out";
    Scheme scheme = Scheme::conservative;
    WrapPolicy wrap_policy = WrapPolicy::reject;
    DetectorConfig detect;
    bool stop_on_blowup = true;
    bool riccati_cap = true;
    bool fit_profile = true;
    double fit_time_fraction = 0.97;
    ProfileWindow profile_window;
    std::optional<double> checkpoint_time;
    bool stop_after_checkpoint = false;
    std::size_t keyframe_stride = 256;
    bool write_snapshots = true;

    double resolved_frame_speed() const
    {
        if (frame_speed) {
            return *frame_speed;
        }
        return initial.kind == InitialKind::simple_wave ? std::sqrt(params.g * params.h_star) : 0.0;
    }

    Grid grid() const
    {
        if (length_per_width) {
            double const w = initial.delta * initial.delta * initial.delta;
            return Grid(n_points, *length_per_width * w);
        }
        return Grid(n_points, length);
    }

    void validate() const
    {
        require(schema == 1, ErrorCode::config_error, "unsupported schema " + std::to_string(schema));
        params.validate();
        (void)grid();
        require(horizon > 0, ErrorCode::config_error, "horizon must be positive");
        require(snapshot_stride >= 1, ErrorCode::config_error, "snapshot_stride must be >= 1");
        require(cfl_number > 0 && cfl_number <= 0.9, ErrorCode::config_error,
                "cfl_number must lie in (0, 0.9]");
        require(keyframe_stride >= 1, ErrorCode::config_error, "keyframe_stride must be >= 1");
        require(!length_per_width || initial.kind == InitialKind::simple_wave,
                ErrorCode::config_error, "length_per_width needs simple_wave initial data");
        require(detect.threshold > 0, ErrorCode::config_error, "threshold must be positive");
        require(std::isfinite(resolved_frame_speed()), ErrorCode::config_error,
                "frame_speed must be finite");
        require(fit_time_fraction > 0 && fit_time_fraction < 1, ErrorCode::config_error,
                "profile t_fraction must lie in (0, 1)");
    }
};

//---------------------------------------------------------------------------//
namespace detail {

template<class E>
struct EnumName {
    E value;
    const char* name;
};

inline constexpr EnumName<InitialKind> initial_names[] = {
    {InitialKind::constant, "constant"},   {InitialKind::simple_wave, "simple_wave"},
    {InitialKind::two_bump, "two_bump"},   {InitialKind::packet, "packet"},
    {InitialKind::file, "file"},
};
inline constexpr EnumName<Mode> mode_names[] = {
    {Mode::rigorous, "rigorous"},
    {Mode::empirical, "empirical"},
};
inline constexpr EnumName<WrapPolicy> wrap_names[] = {
    {WrapPolicy::reject, "reject"},
    {WrapPolicy::periodic, "periodic"},
};
inline constexpr EnumName<Scheme> scheme_names[] = {
    {Scheme::conservative, "conservative"},
    {Scheme::direct, "direct"},
};

template<class E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E v)
{
    for (auto const& e : table) {
        if (e.value == v) {
            return e.name;
        }
    }
    return "?";
}

template<class E, std::size_t N>
E enum_value(const EnumName<E> (&table)[N], const std::string& s, const char* what)
{
    for (auto const& e : table) {
        if (s == e.name) {
            return e.value;
        }
    }
    throw Error(ErrorCode::config_error, std::string("unknown ") + what + " '" + s + "'");
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& where)
{
    require(j.is_object(), ErrorCode::config_error, where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || it.key() == a;
        }
        require(ok, ErrorCode::config_error, "unknown key '" + it.key() + "' in " + where);
    }
}

template<class T>
void get_opt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

} // namespace detail

inline nlohmann::json to_json(const RunConfig& c)
{
    using nlohmann::json;
    json init = {{"kind", detail::enum_name(detail::initial_names, c.initial.kind)}};
    switch (c.initial.kind) {
    case InitialKind::constant:
        init["eta"] = c.initial.eta;
        init["u"] = c.initial.u;
        break;
    case InitialKind::simple_wave: init["delta"] = c.initial.delta; break;
    case InitialKind::two_bump: {
        auto const& b = c.initial.two_bump;
        init["depth_amplitude"] = b.depth_amplitude;
        init["depth_width"] = b.depth_width;
        init["depth_center"] = b.depth_center;
        init["velocity_amplitude"] = b.velocity_amplitude;
        init["velocity_width"] = b.velocity_width;
        init["velocity_center"] = b.velocity_center;
        break;
    }
    case InitialKind::packet:
        init["amplitude"] = c.initial.amplitude;
        init["width"] = c.initial.width;
        init["center"] = c.initial.center;
        break;
    case InitialKind::file: init["path"] = c.initial.path; break;
    }

    json grid = {{"n_points", c.n_points}};
    if (c.length_per_width) {
        grid["length_per_width"] = *c.length_per_width;
    } else {
        grid["length"] = c.length;
    }

    json j = {
        {"schema", c.schema},
        {"params",
         {{"g", c.params.g},
          {"epsilon", c.params.epsilon},
          {"alpha", c.params.alpha},
          {"h_star", c.params.h_star},
          {"classical_branch", c.params.classical_branch}}},
        {"grid", grid},
        {"initial", init},
        {"frame_speed", c.resolved_frame_speed()},
        {"horizon", c.horizon},
        {"snapshot_stride", c.snapshot_stride},
        {"cfl_number", c.cfl_number},
        {"mode", detail::enum_name(detail::mode_names, c.mode)},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"scheme", detail::enum_name(detail::scheme_names, c.scheme)},
        {"wrap_policy", detail::enum_name(detail::wrap_names, c.wrap_policy)},
        {"detect",
         {{"threshold", c.detect.threshold},
          {"fit_fraction", c.detect.fit_fraction},
          {"r_squared_min", c.detect.r_squared_min},
          {"depth_margin", c.detect.depth_margin},
          {"stop_on_blowup", c.stop_on_blowup}}},
        {"riccati_cap", c.riccati_cap},
        {"profile",
         {{"enabled", c.fit_profile},
          {"t_fraction", c.fit_time_fraction},
          {"inner_cells", c.profile_window.inner_cells},
          {"outer_fraction", c.profile_window.outer_fraction}}},
        {"keyframe_stride", c.keyframe_stride},
        {"write_snapshots", c.write_snapshots},
    };
    if (c.checkpoint_time) {
        j["checkpoint"] = {{"time", *c.checkpoint_time}, {"stop", c.stop_after_checkpoint}};
    }
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j)
{
    using namespace detail;
    RunConfig c;
    try {
        check_keys(j,
                   {"schema", "params", "grid", "initial", "frame_speed", "horizon", "snapshot_stride",
                    "cfl_number", "mode", "seed", "output_dir", "scheme", "wrap_policy", "detect",
                    "riccati_cap", "profile", "checkpoint", "keyframe_stride", "write_snapshots"},
                   "config");
        require(j.contains("schema"), ErrorCode::config_error, "missing \"schema\"");
        c.schema = j.at("schema").get<int>();
        require(c.schema == 1, ErrorCode::config_error,
                "unsupported schema " + std::to_string(c.schema));

        if (j.contains("params")) {
            auto const& p = j.at("params");
            check_keys(p, {"g", "epsilon", "alpha", "h_star", "classical_branch"}, "params");
            get_opt(p, "g", c.params.g);
            get_opt(p, "epsilon", c.params.epsilon);
            get_opt(p, "alpha", c.params.alpha);
            get_opt(p, "h_star", c.params.h_star);
            get_opt(p, "classical_branch", c.params.classical_branch);
        }
        if (j.contains("grid")) {
            auto const& g = j.at("grid");
            check_keys(g, {"n_points", "length", "length_per_width"}, "grid");
            get_opt(g, "n_points", c.n_points);
            get_opt(g, "length", c.length);
            if (g.contains("length_per_width")) {
                c.length_per_width = g.at("length_per_width").get<double>();
            }
        }
        if (j.contains("initial")) {
            auto const& in = j.at("initial");
            require(in.contains("kind"), ErrorCode::config_error, "initial.kind missing");
            c.initial.kind = enum_value(initial_names, in.at("kind").get<std::string>(), "initial kind");
            check_keys(in,
                       {"kind", "eta", "u", "delta", "depth_amplitude", "depth_width",
                        "depth_center", "velocity_amplitude", "velocity_width", "velocity_center",
                        "amplitude", "width", "center", "path"},
                       "initial");
            get_opt(in, "eta", c.initial.eta);
            get_opt(in, "u", c.initial.u);
            get_opt(in, "delta", c.initial.delta);
            get_opt(in, "depth_amplitude", c.initial.two_bump.depth_amplitude);
            get_opt(in, "depth_width", c.initial.two_bump.depth_width);
            get_opt(in, "depth_center", c.initial.two_bump.depth_center);
            get_opt(in, "velocity_amplitude", c.initial.two_bump.velocity_amplitude);
            get_opt(in, "velocity_width", c.initial.two_bump.velocity_width);
            get_opt(in, "velocity_center", c.initial.two_bump.velocity_center);
            get_opt(in, "amplitude", c.initial.amplitude);
            get_opt(in, "width", c.initial.width);
            get_opt(in, "center", c.initial.center);
            get_opt(in, "path", c.initial.path);
        }
        if (j.contains("frame_speed")) {
            c.frame_speed = j.at("frame_speed").get<double>();
        }
        get_opt(j, "horizon", c.horizon);
        get_opt(j, "snapshot_stride", c.snapshot_stride);
        get_opt(j, "cfl_number", c.cfl_number);
        if (j.contains("mode")) {
            c.mode = enum_value(mode_names, j.at("mode").get<std::string>(), "mode");
        }
        get_opt(j, "seed", c.seed);
        get_opt(j, "output_dir", c.output_dir);
        if (j.contains("scheme")) {
            c.scheme = enum_value(scheme_names, j.at("scheme").get<std::string>(), "scheme");
        }
        if (j.contains("wrap_policy")) {
            c.wrap_policy = enum_value(wrap_names, j.at("wrap_policy").get<std::string>(),
                                       "wrap policy");
        }
        if (j.contains("detect")) {
            auto const& d = j.at("detect");
            check_keys(d, {"threshold", "fit_fraction", "r_squared_min", "depth_margin", "stop_on_blowup"},
                       "detect");
            get_opt(d, "threshold", c.detect.threshold);
            get_opt(d, "fit_fraction", c.detect.fit_fraction);
            get_opt(d, "r_squared_min", c.detect.r_squared_min);
            get_opt(d, "depth_margin", c.detect.depth_margin);
            get_opt(d, "stop_on_blowup", c.stop_on_blowup);
        }
        get_opt(j, "riccati_cap", c.riccati_cap);
        if (j.contains("profile")) {
            auto const& p = j.at("profile");
            check_keys(p, {"enabled", "t_fraction", "inner_cells", "outer_fraction"}, "profile");
            get_opt(p, "enabled", c.fit_profile);
            get_opt(p, "t_fraction", c.fit_time_fraction);
            get_opt(p, "inner_cells", c.profile_window.inner_cells);
            get_opt(p, "outer_fraction", c.profile_window.outer_fraction);
        }
        if (j.contains("checkpoint")) {
            auto const& k = j.at("checkpoint");
            check_keys(k, {"time", "stop"}, "checkpoint");
            if (k.contains("time")) {
                c.checkpoint_time = k.at("time").get<double>();
            }
            get_opt(k, "stop", c.stop_after_checkpoint);
        }
        get_opt(j, "keyframe_stride", c.keyframe_stride);
        get_opt(j, "write_snapshots", c.write_snapshots);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config_error, e.what());
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io_error, "cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config_error, path + ": " + e.what());
    }
    return config_from_json(j);
}

//---------------------------------------------------------------------------//
// Reads the eta and u columns of a CSV with a header row.
inline State read_state_csv(const std::string& path, const Grid& grid)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io_error, "cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cols.push_back(c);
        }
    }
    auto find = [&](const char* name) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == name) {
                return k;
            }
        }
        throw Error(ErrorCode::config_error, path + " lacks column " + name);
    };
    std::size_t const ie = find("eta");
    std::size_t const iu = find("u");
    std::vector<double> eta, u;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string c;
        std::size_t k = 0;
        while (std::getline(ss, c, ',')) {
            if (k == ie) {
                eta.push_back(std::stod(c));
            }
            if (k == iu) {
                u.push_back(std::stod(c));
            }
            ++k;
        }
    }
    State s{Field(std::move(eta)), Field(std::move(u)), 0.0};
    check_length(s.eta, grid);
    check_length(s.u, grid);
    return s;
}

namespace detail {

inline State lab_initial_state(const RunConfig& c)
{
    Grid const grid = c.grid();
    const Params& p = c.params;
    switch (c.initial.kind) {
    case InitialKind::constant:
        return State{Field(grid.size(), c.initial.eta), Field(grid.size(), c.initial.u), 0.0};
    case InitialKind::simple_wave: return generate_blowup_data(c.initial.delta, p, grid);
    case InitialKind::two_bump: return generate_two_bump(c.initial.two_bump, p, grid);
    case InitialKind::packet: {
        double const L = grid.length();
        double const speed = std::sqrt(p.g / p.h_star);
        State s{Field(grid.size()), Field(grid.size()), 0.0};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double const e =
                c.initial.amplitude * bump((grid.x(i) - c.initial.center * L) / (c.initial.width * L));
            s.eta[i] = e;
            s.u[i] = speed * e;
        }
        return s;
    }
    case InitialKind::file: return read_state_csv(c.initial.path, grid);
    }
    throw Error(ErrorCode::config_error, "bad initial kind");
}

} // namespace detail

// Initial state in the computational frame.
inline State initial_state(const RunConfig& c)
{
    State s = detail::lab_initial_state(c);
    double const shift = c.resolved_frame_speed() / c.params.alpha;
    if (shift != 0) {
        for (auto& v : s.u) {
            v -= shift;
        }
    }
    return s;
}

} // namespace rsv
