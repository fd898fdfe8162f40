#pragma once

#include <array>
#include <charconv>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "config.hpp"

namespace rsv {

//---------------------------------------------------------------------------//
// Time-step policy shared by runs and replays: CFL limit, capped by the
// Riccati time scale 0.5 / max(|P+|, |P-|, 1), clipped at t_end.
inline double next_dt(const State& state, const InvariantFields& inv, const RunConfig& cfg,
                      const Grid& grid, double t_end)
{
    double dt = cfl_dt(state, cfg.params, grid, cfg.cfl_number);
    if (cfg.riccati_cap) {
        double const p = std::max({max_abs(inv.P_plus), max_abs(inv.P_minus), 1.0});
        dt = std::min(dt, 0.5 / p);
    }
    return std::min(dt, t_end - state.time);
}

// One accepted step; lands exactly on t_end when clipped.
inline State advance(const State& state, const InvariantFields& inv, const RunConfig& cfg,
                     const Grid& grid, double t_end)
{
    double const dt = next_dt(state, inv, cfg, grid, t_end);
    State next = step(state, dt, cfg.params, grid, RhsOptions{cfg.scheme, {}});
    if (dt == t_end - state.time) {
        next.time = t_end;
    }
    return next;
}

//---------------------------------------------------------------------------//
// E_tilde is measured in the computational frame, where the scheme conserves
// it; E_star is the physical energy at rest.
struct LedgerRow {
    double t, E_tilde, E_star, conservation_residual;
    double min_h, max_h;
    double min_P_plus, max_P_plus, max_abs_P_minus;
    double Q_inf_norm, M_t;
    double mass;
    // Right side of the nonlocal-term bound with measured extremes of h.
    double Q_bound;
    // Pointwise energy-depth inequality and Q bound re-checked at export.
    double checks_ok;
    double step;

    static constexpr std::size_t columns = 15;
    static constexpr const char* header =
        "t,E_tilde,E_star,conservation_residual,min_h,max_h,min_P_plus,max_P_plus,"
        "max_abs_P_minus,Q_inf_norm,M_t,mass,Q_bound,checks_ok,step";

    std::array<double, columns> values() const
    {
        return {t, E_tilde, E_star, conservation_residual, min_h, max_h, min_P_plus, max_P_plus,
                max_abs_P_minus, Q_inf_norm, M_t, mass, Q_bound, checks_ok, step};
    }

    static LedgerRow from_values(const double* v)
    {
        return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7],
                v[8], v[9], v[10], v[11], v[12], v[13], v[14]};
    }
};

// (16 / eps^{3/2}) (h_max^2 / h_min^6) E_star
inline double q_bound(double E_star, double h_min, double h_max, const Params& p)
{
    double const h6 = std::pow(h_min, 6);
    return 16 / std::pow(p.epsilon, 1.5) * h_max * h_max / h6 * E_star;
}

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shortest round-trip form, for directory names.
inline std::string short_double(double v)
{
    char buf[40];
    auto const r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

struct RunResult {
    RunConfig config;
    std::vector<LedgerRow> ledger;
    BlowupVerdict verdict;
    std::optional<ProfileFit> profile;
    std::string profile_error;
    State initial;
    State final_state;
    std::vector<State> keyframes;
    std::vector<double> step_times;
    std::vector<double> step_min_P;
    double E_tilde0 = 0;
    double mass0 = 0;
    double max_energy_drift = 0;
    double max_mass_drift = 0;
    std::size_t steps = 0;
    bool stopped_at_checkpoint = false;
    std::optional<CertificationReport> certification;
};

//---------------------------------------------------------------------------//
// Deterministic re-simulation of a run from its keyframes.
class ReplayRun final : public StateSequence {
  public:
    ReplayRun(RunConfig cfg, State start, double t_end)
        : cfg_(std::move(cfg)), grid_(cfg_.grid()), start_(std::move(start)), t_end_(t_end)
    {
    }

    const Grid& grid() const override { return grid_; }
    const Params& params() const override { return cfg_.params; }

    // Steps exactly as the original run (clipped at its horizon) and stops
    // after the last state not later than t_end.
    void for_each(const std::function<bool(const State&)>& visit) const override
    {
        State s = start_;
        while (s.time <= t_end_ && visit(s) && s.time < cfg_.horizon) {
            auto const inv = invariants(s, cfg_.params, grid_);
            s = advance(s, inv, cfg_, grid_, cfg_.horizon);
        }
    }

  private:
    RunConfig cfg_;
    Grid grid_;
    State start_;
    double t_end_;
};

// State at exactly t, stepping from the latest keyframe not after t with the
// run's own step sequence and a clipped final step.
inline State replay_to(const RunConfig& cfg, const std::vector<State>& keyframes, double t)
{
    require(!keyframes.empty(), ErrorCode::invalid_argument, "no keyframes to replay from");
    Grid const grid = cfg.grid();
    std::size_t k = 0;
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        if (keyframes[i].time <= t) {
            k = i;
        }
    }
    State s = keyframes[k];
    while (s.time < t) {
        auto const inv = invariants(s, cfg.params, grid);
        s = advance(s, inv, cfg, grid, t);
    }
    return s;
}

//---------------------------------------------------------------------------//
// Checkpoint: magic, format version, shape, embedded config, run state as raw
// little-endian doubles, trailing FNV-1a checksum.
inline constexpr char checkpoint_magic[8] = {'R', 'S', 'V', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint64_t checkpoint_version = 1;

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

class ByteWriter {
  public:
    void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u64(std::uint64_t v)
    {
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) {
            b[k] = static_cast<unsigned char>(v >> (8 * k));
        }
        raw(b, 8);
    }
    void f64(double v)
    {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void field(const Field& f)
    {
        for (double v : f) {
            f64(v);
        }
    }
    void doubles(const std::vector<double>& v)
    {
        u64(v.size());
        for (double x : v) {
            f64(x);
        }
    }
    void state(const State& s)
    {
        f64(s.time);
        field(s.eta);
        field(s.u);
    }
    const std::string& bytes() const { return buf_; }

  private:
    std::string buf_;
};

class ByteReader {
  public:
    explicit ByteReader(const std::string& b, std::size_t end) : buf_(b), end_(end) {}
    void raw(void* p, std::size_t n)
    {
        require(pos_ + n <= end_, ErrorCode::corrupt_checkpoint, "truncated checkpoint");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint64_t u64()
    {
        unsigned char b[8];
        raw(b, 8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) {
            v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
        }
        return v;
    }
    double f64()
    {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    Field field(std::size_t n)
    {
        Field f(n);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = f64();
        }
        return f;
    }
    std::vector<double> doubles()
    {
        std::uint64_t const m = u64();
        require(m <= (end_ - pos_) / 8, ErrorCode::corrupt_checkpoint, "bad array length");
        std::vector<double> v(m);
        for (auto& x : v) {
            x = f64();
        }
        return v;
    }
    State state(std::size_t n)
    {
        State s;
        s.time = f64();
        s.eta = field(n);
        s.u = field(n);
        return s;
    }
    bool done() const { return pos_ == end_; }

  private:
    const std::string& buf_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

} // namespace detail

// Everything needed to continue a run exactly where it stopped.
struct RunSnapshot {
    RunConfig config;
    std::uint64_t step = 0;
    State state;
    State prev;
    double E_tilde0 = 0;
    double mass0 = 0;
    double sup_plus = 0;
    double sup_minus = 0;
    bool crossed = false;
    bool depth_hit = false;
    double t_stop = 0;
    std::vector<double> times;
    std::vector<double> min_P;
    std::vector<LedgerRow> ledger;
    std::vector<State> keyframes;
    std::uint64_t snapshot_index = 0;
};

inline void write_checkpoint(const std::string& path, const RunSnapshot& s)
{
    Grid const grid = s.config.grid();
    detail::ByteWriter w;
    w.raw(checkpoint_magic, 8);
    w.u64(checkpoint_version);
    w.u64(grid.size());
    w.f64(grid.length());
    w.f64(s.config.params.g);
    w.f64(s.config.params.epsilon);
    w.f64(s.config.params.alpha);
    w.f64(s.config.params.h_star);
    w.u64(s.config.params.classical_branch ? 1 : 0);
    std::string const cfg = to_json(s.config).dump();
    w.u64(cfg.size());
    w.raw(cfg.data(), cfg.size());
    w.u64(s.step);
    w.f64(s.E_tilde0);
    w.f64(s.mass0);
    w.f64(s.sup_plus);
    w.f64(s.sup_minus);
    w.u64(s.crossed ? 1 : 0);
    w.u64(s.depth_hit ? 1 : 0);
    w.f64(s.t_stop);
    w.u64(s.snapshot_index);
    w.state(s.state);
    w.state(s.prev);
    w.doubles(s.times);
    w.doubles(s.min_P);
    w.u64(s.ledger.size());
    for (auto const& row : s.ledger) {
        for (double v : row.values()) {
            w.f64(v);
        }
    }
    w.u64(s.keyframes.size());
    for (auto const& k : s.keyframes) {
        w.state(k);
    }
    std::string bytes = w.bytes();
    detail::ByteWriter tail;
    tail.u64(detail::fnv1a(bytes));
    bytes += tail.bytes();

    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::io_error, "write failed for " + path);
}

inline RunSnapshot read_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io_error, "cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(bytes.size() >= 24 && std::memcmp(bytes.data(), checkpoint_magic, 8) == 0,
            ErrorCode::corrupt_checkpoint, path + " is not a checkpoint");
    std::size_t const body = bytes.size() - 8;
    {
        detail::ByteReader tail(bytes, bytes.size());
        std::string head(bytes.data(), body);
        std::uint64_t stored = 0;
        for (int k = 0; k < 8; ++k) {
            stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[body + k])) << (8 * k);
        }
        require(stored == detail::fnv1a(head), ErrorCode::corrupt_checkpoint,
                "checksum mismatch in " + path);
    }
    detail::ByteReader r(bytes, body);
    char magic[8];
    r.raw(magic, 8);
    std::uint64_t const version = r.u64();
    require(version == checkpoint_version, ErrorCode::version_or_shape_mismatch,
            "checkpoint format " + std::to_string(version));
    std::uint64_t const n = r.u64();
    double const length = r.f64();
    Params p;
    p.g = r.f64();
    p.epsilon = r.f64();
    p.alpha = r.f64();
    p.h_star = r.f64();
    p.classical_branch = r.u64() != 0;
    std::uint64_t const len = r.u64();
    std::string cfg(len, '\0');
    r.raw(cfg.data(), len);

    RunSnapshot s;
    try {
        s.config = config_from_json(nlohmann::json::parse(cfg));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::corrupt_checkpoint, e.what());
    }
    Grid const grid = s.config.grid();
    require(grid.size() == n && grid.length() == length && s.config.params == p,
            ErrorCode::corrupt_checkpoint, "header disagrees with embedded config");
    s.step = r.u64();
    s.E_tilde0 = r.f64();
    s.mass0 = r.f64();
    s.sup_plus = r.f64();
    s.sup_minus = r.f64();
    s.crossed = r.u64() != 0;
    s.depth_hit = r.u64() != 0;
    s.t_stop = r.f64();
    s.snapshot_index = r.u64();
    s.state = r.state(n);
    s.prev = r.state(n);
    s.times = r.doubles();
    s.min_P = r.doubles();
    std::uint64_t const rows = r.u64();
    for (std::uint64_t k = 0; k < rows; ++k) {
        double v[LedgerRow::columns];
        for (double& x : v) {
            x = r.f64();
        }
        s.ledger.push_back(LedgerRow::from_values(v));
    }
    std::uint64_t const nk = r.u64();
    for (std::uint64_t k = 0; k < nk; ++k) {
        s.keyframes.push_back(r.state(n));
    }
    require(r.done(), ErrorCode::corrupt_checkpoint, "trailing bytes in " + path);
    return s;
}

//---------------------------------------------------------------------------//
namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + path.string());
    out << text;
    require(static_cast<bool>(out), ErrorCode::io_error, "write failed for " + path.string());
}

inline std::string csv_line(std::initializer_list<double> values)
{
    std::string s;
    bool first = true;
    for (double v : values) {
        if (!first) {
            s += ',';
        }
        s += format_double(v);
        first = false;
    }
    s += '\n';
    return s;
}

} // namespace detail

inline nlohmann::json to_json(const BlowupVerdict& v)
{
    return {{"schema", 1},
            {"detected", v.detected},
            {"mode", to_string(v.mode)},
            {"t_detect", v.t_detect},
            {"t_blowup_extrapolated", v.t_blowup_extrapolated},
            {"slope_fit", v.slope_fit},
            {"r_squared", v.r_squared},
            {"fit_t_lo", v.fit_t_lo},
            {"fit_t_hi", v.fit_t_hi},
            {"fit_samples", v.fit_samples},
            {"threshold", v.threshold},
            {"valid", v.valid}};
}

inline nlohmann::json to_json(const ProfileFit& f)
{
    return {{"schema", 1},          {"x0", f.x0},
            {"a_fit", f.a_fit},     {"b_fit", f.b_fit},
            {"exponent", f.exponent}, {"r_squared", f.r_squared},
            {"window", {f.window_lo, f.window_hi}}, {"points", f.points},
            {"t_fit", f.t_fit},     {"distance", f.distance},
            {"magnitude", f.magnitude}};
}

inline nlohmann::json to_json(const CertificationReport& r)
{
    nlohmann::json items = nlohmann::json::array();
    for (auto const& c : r.items) {
        items.push_back({{"name", c.name},
                         {"value", c.value},
                         {"bound", c.bound},
                         {"pass", c.pass},
                         {"margin", c.margin}});
    }
    return {{"certified", r.certified}, {"items", items}};
}

inline nlohmann::json to_json(const ConstantsLedger& L)
{
    return {{"C1", L.C1},
            {"C2", L.C2},
            {"C3", L.C3},
            {"C4", L.C4},
            {"kappa0", L.kappa0},
            {"T_star", L.T_star},
            {"T_star_star", L.T_star_star},
            {"E_threshold_prop21", L.E_threshold_prop21},
            {"E_threshold_step0", L.E_threshold_step0}};
}

inline void write_snapshot_csv(const std::filesystem::path& path, const State& s,
                               const InvariantFields& inv, const Field& Q, const Params& p,
                               const Grid& grid)
{
    std::string text = "x,eta,u,h,P_plus,P_minus,Q\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        text += detail::csv_line({grid.x(i), s.eta[i], s.u[i], p.h_star + p.alpha * s.eta[i],
                                  inv.P_plus[i], inv.P_minus[i], Q[i]});
    }
    detail::write_text(path, text);
}

inline std::string ledger_csv(const std::vector<LedgerRow>& rows)
{
    std::string text = std::string(LedgerRow::header) + "\n";
    for (auto const& r : rows) {
        auto const v = r.values();
        for (std::size_t k = 0; k < v.size(); ++k) {
            text += (k ? "," : "") + format_double(v[k]);
        }
        text += '\n';
    }
    return text;
}

//---------------------------------------------------------------------------//
// Support extent of the initial data and the no-wrap condition
// support + max|lambda| T < L/2.
inline double support_width(const State& s, const Grid& grid)
{
    std::size_t first = grid.size(), last = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (s.eta[i] != 0 || s.u[i] != 0) {
            first = std::min(first, i);
            last = std::max(last, i);
        }
    }
    if (first > last) {
        return 0;
    }
    return static_cast<double>(last - first + 1) * grid.dx();
}

inline void check_no_wrap(const RunConfig& cfg, const State& s0, const Grid& grid)
{
    if (cfg.wrap_policy == WrapPolicy::periodic) {
        return;
    }
    auto const inv = invariants(s0, cfg.params, grid);
    double const speed = std::max(max_abs(inv.lambda_plus), max_abs(inv.lambda_minus));
    // Support of the disturbance, so a moving frame does not fill the domain.
    State rest = s0;
    double const shift = cfg.resolved_frame_speed() / cfg.params.alpha;
    for (auto& v : rest.u) {
        v += shift;
    }
    double const reach = support_width(rest, grid) + speed * cfg.horizon;
    require(reach < 0.5 * grid.length(), ErrorCode::wrap_violation,
            "support + max|lambda| T = " + format_double(reach) + " exceeds L/2 = "
                + format_double(0.5 * grid.length())
                + "; enlarge the domain or set wrap_policy periodic");
}

/*!
 * Step loop with diagnostics, snapshots, blow-up detection and checkpoints.
 *
 * Outputs go to config.output_dir: config.json, ledger.csv, riccati.csv
 * (t, min P+ per step), verdict.json, profile.json and snapshots/.
 */
class Runner {
  public:
    explicit Runner(RunConfig cfg) : cfg_(std::move(cfg)), grid_(cfg_.grid())
    {
        cfg_.validate();
        frame_moving_ = cfg_.resolved_frame_speed() != 0;
        State s0 = initial_state(cfg_);
        check_no_wrap(cfg_, s0, grid_);
        snap_.config = cfg_;
        snap_.state = s0;
        snap_.prev = s0;
        snap_.E_tilde0 = scaled_energy(s0, cfg_.params, grid_);
        snap_.mass0 = mass(s0, grid_);
        snap_.keyframes.push_back(s0);
    }

    // Continue from a checkpoint. Output location, horizon and checkpoint
    // settings come from cfg; shape and physics must match the stored run.
    static Runner resume(const std::string& path, const RunConfig& cfg)
    {
        RunSnapshot s = read_checkpoint(path);
        Grid const stored = s.config.grid();
        Grid const wanted = cfg.grid();
        require(stored == wanted && s.config.params == cfg.params
                    && s.config.initial == cfg.initial && s.config.scheme == cfg.scheme
                    && s.config.resolved_frame_speed() == cfg.resolved_frame_speed()
                    && s.config.cfl_number == cfg.cfl_number
                    && s.config.riccati_cap == cfg.riccati_cap
                    && s.config.snapshot_stride == cfg.snapshot_stride
                    && s.config.keyframe_stride == cfg.keyframe_stride,
                ErrorCode::version_or_shape_mismatch,
                "checkpoint was written for a different grid, physics or step policy");
        Runner r(std::move(s), cfg);
        return r;
    }

    const RunConfig& config() const { return cfg_; }

    RunResult run()
    {
        namespace fs = std::filesystem;
        fs::path const dir(cfg_.output_dir);
        fs::create_directories(dir);
        if (cfg_.write_snapshots) {
            fs::create_directories(dir / "snapshots");
        }
        detail::write_text(dir / "config.json", to_json(cfg_).dump(2) + "\n");

        const Params& p = cfg_.params;
        DetectorConfig dcfg = cfg_.detect;
        std::optional<ConstantsLedger> constants;
        if (!p.classical_branch) {
            constants = constants_ledger(p);
            if (cfg_.mode == Mode::rigorous) {
                dcfg.threshold = std::fabs(constants->kappa0);
            }
        }
        double const E_star0 =
            p.alpha * p.alpha * scaled_energy(lab_frame(snap_.keyframes.front()), p, grid_);
        BlowupDetector detector(dcfg, E_star0, p);
        detector.restore(snap_.times, snap_.min_P, snap_.crossed, snap_.depth_hit, snap_.t_stop);
        SupTracker sup;
        sup.restore(snap_.sup_plus, snap_.sup_minus);

        RunResult res;
        res.config = cfg_;
        res.initial = snap_.keyframes.front();
        if (!p.classical_branch) {
            res.certification = certify_hypotheses(lab_frame(res.initial), p, grid_);
        }

        State state = snap_.state;
        State prev = snap_.prev;
        std::uint64_t step_index = snap_.step;
        std::size_t last_row_step = snap_.ledger.empty()
                                        ? std::size_t(-1)
                                        : static_cast<std::size_t>(snap_.ledger.back().step);
        bool checkpoint_written = cfg_.checkpoint_time && state.time >= *cfg_.checkpoint_time
                                  && step_index > 0 && resumed_;

        auto add_row = [&](const State& s, const State& s_prev, const InvariantFields& inv,
                           double M) {
            auto const rep = energy_report(s, s_prev, p, grid_);
            Field const h = depth(s, p);
            Field const Q = riccati_Q(s, inv, p, grid_);
            LedgerRow row{};
            row.t = s.time;
            row.E_tilde = rep.E_tilde;
            row.E_star = frame_moving_ ? p.alpha * p.alpha * scaled_energy(lab_frame(s), p, grid_)
                                       : rep.E_star;
            row.conservation_residual = rep.conservation_residual;
            row.min_h = min_value(h);
            row.max_h = max_value(h);
            row.min_P_plus = min_value(inv.P_plus);
            row.max_P_plus = max_value(inv.P_plus);
            row.max_abs_P_minus = max_abs(inv.P_minus);
            row.Q_inf_norm = max_abs(Q);
            row.M_t = M;
            row.mass = mass(s, grid_);
            bool ok = true;
            if (!p.classical_branch) {
                row.Q_bound = q_bound(row.E_star, row.min_h, row.max_h, p);
                ok = row.Q_inf_norm <= row.Q_bound;
                double cubic = 0;
                for (double hv : h) {
                    cubic = std::max(cubic, depth_cubic(hv, p));
                }
                ok = ok && row.E_star >= cubic * (1 - 0.02);
            }
            row.checks_ok = ok ? 1.0 : 0.0;
            row.step = static_cast<double>(step_index);
            snap_.ledger.push_back(row);
            last_row_step = step_index;
            if (cfg_.write_snapshots) {
                char name[64];
                std::snprintf(name, sizeof name, "snapshot_%06" PRIu64 ".csv", snap_.snapshot_index);
                write_snapshot_csv(dir / "snapshots" / name, s, inv, Q, p, grid_);
            }
            ++snap_.snapshot_index;
        };

        while (true) {
            auto const inv = invariants(state, p, grid_);
            double const M = sup.update(inv);
            double const minP = min_value(inv.P_plus);
            Field const h = depth(state, p);
            bool stop = detector.observe(state.time, minP, min_value(h));
            stop = stop && (cfg_.stop_on_blowup || detector.depth_hit());
            bool const at_end = state.time >= cfg_.horizon;
            if (step_index % cfg_.snapshot_stride == 0 || ((stop || at_end) && last_row_step != step_index)) {
                add_row(state, prev, inv, M);
            }
            if (stop || at_end) {
                break;
            }
            State next;
            try {
                next = advance(state, inv, cfg_, grid_, cfg_.horizon);
            } catch (const NonPositiveDepthError& e) {
                detector.depth_failure(e.stage_state().time);
                break;
            }
            prev = std::move(state);
            state = std::move(next);
            ++step_index;
            if (step_index % cfg_.keyframe_stride == 0) {
                snap_.keyframes.push_back(state);
            }
            if (cfg_.checkpoint_time && !checkpoint_written && state.time >= *cfg_.checkpoint_time) {
                checkpoint_written = true;
                capture(state, prev, step_index, detector, sup);
                write_checkpoint((dir / "checkpoint.bin").string(), snap_);
                if (cfg_.stop_after_checkpoint) {
                    res.stopped_at_checkpoint = true;
                    break;
                }
            }
        }

        capture(state, prev, step_index, detector, sup);
        res.verdict = detector.verdict();
        res.ledger = snap_.ledger;
        res.final_state = state;
        res.keyframes = snap_.keyframes;
        res.step_times = detector.times();
        res.step_min_P = detector.min_P_plus();
        res.E_tilde0 = snap_.E_tilde0;
        res.mass0 = snap_.mass0;
        res.steps = step_index;
        for (auto const& row : res.ledger) {
            if (res.E_tilde0 > 0) {
                res.max_energy_drift = std::max(res.max_energy_drift,
                                                std::fabs(row.E_tilde - res.E_tilde0) / res.E_tilde0);
            }
            double const drift = std::fabs(row.mass - res.mass0);
            res.max_mass_drift = std::max(
                res.max_mass_drift, res.mass0 != 0 ? drift / std::fabs(res.mass0) : drift);
        }

        if (!res.stopped_at_checkpoint && cfg_.fit_profile
            && res.verdict.mode == BlowupMode::P_plus_blowup) {
            double const t_fit = cfg_.fit_time_fraction * res.verdict.t_blowup_extrapolated;
            if (t_fit <= state.time) {
                try {
                    State const sf = replay_to(cfg_, snap_.keyframes, t_fit);
                    res.profile = fit_profile(sf, p, grid_, cfg_.profile_window);
                } catch (const Error& e) {
                    res.profile_error = e.what();
                }
            } else {
                res.profile_error = "fit time beyond the simulated interval";
            }
        }

        write_outputs(dir, res);
        return res;
    }

  private:
    RunConfig cfg_;
    Grid grid_;
    RunSnapshot snap_;
    bool resumed_ = false;

    Runner(RunSnapshot s, const RunConfig& cfg) : cfg_(cfg), grid_(cfg.grid()), snap_(std::move(s))
    {
        cfg_.validate();
        frame_moving_ = cfg_.resolved_frame_speed() != 0;
        snap_.config = cfg_;
        resumed_ = true;
    }

    bool frame_moving_ = false;

    // Thresholds and bounds refer to the physical energy, measured at rest.
    State lab_frame(const State& s) const
    {
        State out = s;
        double const shift = cfg_.resolved_frame_speed() / cfg_.params.alpha;
        for (auto& v : out.u) {
            v += shift;
        }
        return out;
    }

    void capture(const State& state, const State& prev, std::uint64_t step_index,
                 const BlowupDetector& det, const SupTracker& sup)
    {
        snap_.config = cfg_;
        snap_.state = state;
        snap_.prev = prev;
        snap_.step = step_index;
        snap_.times = det.times();
        snap_.min_P = det.min_P_plus();
        snap_.crossed = det.crossed();
        snap_.depth_hit = det.depth_hit();
        snap_.t_stop = det.t_stop();
        snap_.sup_plus = sup.sup_plus();
        snap_.sup_minus = sup.sup_minus();
    }

    void write_outputs(const std::filesystem::path& dir, const RunResult& res) const
    {
        detail::write_text(dir / "ledger.csv", ledger_csv(res.ledger));
        std::string series = "t,min_P_plus\n";
        for (std::size_t k = 0; k < res.step_times.size(); ++k) {
            series += detail::csv_line({res.step_times[k], res.step_min_P[k]});
        }
        detail::write_text(dir / "riccati.csv", series);
        nlohmann::json v = to_json(res.verdict);
        v["max_energy_drift"] = res.max_energy_drift;
        v["max_mass_drift"] = res.max_mass_drift;
        v["steps"] = res.steps;
        v["mode_setting"] = detail::enum_name(detail::mode_names, cfg_.mode);
        if (res.certification) {
            v["certification"] = to_json(*res.certification);
        }
        if (!res.profile_error.empty()) {
            v["profile_error"] = res.profile_error;
        }
        detail::write_text(dir / "verdict.json", v.dump(2) + "\n");
        if (res.profile) {
            detail::write_text(dir / "profile.json", to_json(*res.profile).dump(2) + "\n");
        }
    }
};

inline RunResult run(const RunConfig& cfg)
{
    return Runner(cfg).run();
}

//---------------------------------------------------------------------------//
enum class SweepAxis { delta, epsilon, n_points, cfl_number };

inline SweepAxis sweep_axis(const std::string& s)
{
    if (s == "delta") return SweepAxis::delta;
    if (s == "epsilon") return SweepAxis::epsilon;
    if (s == "n_points") return SweepAxis::n_points;
    if (s == "cfl_number") return SweepAxis::cfl_number;
    throw Error(ErrorCode::config_error, "unknown sweep axis '" + s + "'");
}

struct SweepRow {
    double value = 0;
    bool ok = false;
    std::string mode;
    double t_blowup = 0;
    double slope_fit = 0;
    double exponent = 0;
    double max_energy_drift = 0;
    std::string error;
};

inline std::size_t sweep_threads()
{
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RSV_THREADS")) {
        long const v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            n = static_cast<std::size_t>(v);
        }
    }
    return n;
}

inline std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis,
                                   const std::vector<double>& values)
{
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < values.size(); k = next++) {
            RunConfig cfg = base;
            double const v = values[k];
            SweepRow& row = rows[k];
            row.value = v;
            std::string tag;
            switch (axis) {
            case SweepAxis::delta: cfg.initial.delta = v; tag = "delta"; break;
            case SweepAxis::epsilon: cfg.params.epsilon = v; tag = "epsilon"; break;
            case SweepAxis::n_points: cfg.n_points = static_cast<std::size_t>(v); tag = "n_points"; break;
            case SweepAxis::cfl_number: cfg.cfl_number = v; tag = "cfl_number"; break;
            }
            cfg.output_dir = (std::filesystem::path(base.output_dir) / (tag + "_" + short_double(v))).string();
            try {
                RunResult const r = run(cfg);
                row.ok = true;
                row.mode = to_string(r.verdict.mode);
                row.t_blowup = r.verdict.t_blowup_extrapolated;
                row.slope_fit = r.verdict.slope_fit;
                row.exponent = r.profile ? r.profile->exponent : std::nan("");
                row.max_energy_drift = r.max_energy_drift;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    std::size_t const nthreads = std::min(sweep_threads(), values.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    std::filesystem::create_directories(base.output_dir);
    std::string text = "value,ok,mode,t_blowup,slope_fit,exponent,max_energy_drift,error\n";
    for (auto const& r : rows) {
        std::string err = r.error;
        for (char& c : err) {
            if (c == ',' || c == '\n') {
                c = ';';
            }
        }
        text += format_double(r.value) + "," + (r.ok ? "1" : "0") + "," + r.mode + ","
                + format_double(r.t_blowup) + "," + format_double(r.slope_fit) + ","
                + format_double(r.exponent) + "," + format_double(r.max_energy_drift) + "," + err
                + "\n";
    }
    detail::write_text(std::filesystem::path(base.output_dir) / "summary.csv", text);
    return rows;
}

} // namespace rsv
