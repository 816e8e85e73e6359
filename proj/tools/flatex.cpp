// flatex: band structures, exchange couplings and quantum metric of flat-band
// spin chains, written as plot-ready tables.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.

#include "flatex/analysis.hpp"
#include "flatex/asymptotics.hpp"
#include "flatex/io.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace flatex;
using io::ordered_json;

constexpr const char* kVersion = "1.0.0";

struct RunConfig {
    std::string family = "stub";
    int n = 1;
    std::optional<double> alpha;
    double js = 1.0;
    double t = 1.0;
    double a = 1.0;
    std::optional<int> num_k;
    std::string pair = "BB";
    double rmax = 40.0;
    double eta = 1e-12;
    std::string format = "csv";
    std::string out = "-";
    std::string config;

    // subcommand specific
    bool contributions = false;
    std::string input;
    std::string model = "exponential";
    std::optional<int> select_n;
    std::optional<double> fit_rmin;
    std::optional<double> fit_rmax;
    std::string alpha_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    std::string js_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    std::optional<double> t_ev;
    std::string figure;
    std::string regime = "auto";
};

/// Keys present in the config file override the command line.
void apply_config_file(RunConfig& rc) {
    if (rc.config.empty()) return;
    std::ifstream in(rc.config);
    if (!in) throw ValidationError("cannot open config '" + rc.config + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    static const std::vector<std::string> known = {
        "family", "n", "alpha", "js", "JS", "t", "a", "num_k", "pair", "rmax", "eta", "format", "out", "contributions",
        "input", "model", "select_n", "fit_rmin", "fit_rmax", "alpha_grid", "js_grid", "t_ev", "regime"};
    try {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw ValidationError("unknown config key '" + it.key() + "'");
        auto grid = [](const ordered_json& v) {
            if (v.is_string()) return v.get<std::string>();
            std::string s;
            for (const auto& x : v) s += (s.empty() ? "" : ",") + io::fmt(x.get<double>());
            return s;
        };
        if (j.contains("family")) rc.family = j["family"].get<std::string>();
        if (j.contains("n")) rc.n = j["n"].get<int>();
        if (j.contains("alpha")) rc.alpha = j["alpha"].is_null() ? std::nullopt : std::optional(j["alpha"].get<double>());
        if (j.contains("js")) rc.js = j["js"].get<double>();
        if (j.contains("JS")) rc.js = j["JS"].get<double>();
        if (j.contains("t")) rc.t = j["t"].get<double>();
        if (j.contains("a")) rc.a = j["a"].get<double>();
        if (j.contains("num_k")) rc.num_k = j["num_k"].get<int>();
        if (j.contains("pair")) rc.pair = j["pair"].get<std::string>();
        if (j.contains("rmax")) rc.rmax = j["rmax"].get<double>();
        if (j.contains("eta")) rc.eta = j["eta"].get<double>();
        if (j.contains("format")) rc.format = j["format"].get<std::string>();
        if (j.contains("out")) rc.out = j["out"].get<std::string>();
        if (j.contains("contributions")) rc.contributions = j["contributions"].get<bool>();
        if (j.contains("input")) rc.input = j["input"].get<std::string>();
        if (j.contains("model")) rc.model = j["model"].get<std::string>();
        if (j.contains("select_n")) rc.select_n = j["select_n"].get<int>();
        if (j.contains("fit_rmin")) rc.fit_rmin = j["fit_rmin"].get<double>();
        if (j.contains("fit_rmax")) rc.fit_rmax = j["fit_rmax"].get<double>();
        if (j.contains("alpha_grid")) rc.alpha_grid = grid(j["alpha_grid"]);
        if (j.contains("js_grid")) rc.js_grid = grid(j["js_grid"]);
        if (j.contains("t_ev")) rc.t_ev = j["t_ev"].get<double>();
        if (j.contains("regime")) rc.regime = j["regime"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config value has the wrong type: ") + e.what());
    }
}

ChainSpec chain_spec(const RunConfig& rc) {
    ChainSpec s;
    s.family = parse_family(rc.family);
    s.n = rc.n;
    s.alpha = rc.alpha;
    s.t = rc.t;
    s.js = rc.js;
    s.a = rc.a;
    for (const auto& w : validate(s)) std::cerr << "warning: " << w << '\n';
    return s;
}

ComputeConfig compute_config(const RunConfig& rc, int default_k) {
    ComputeConfig c;
    c.num_k = rc.num_k.value_or(default_k);
    c.eta = rc.eta;
    return c;
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(io::parse_double(item));
    return out;
}

ordered_json base_metadata(const std::string& command, const RunConfig& rc) {
    ordered_json cfg;
    cfg["family"] = rc.family;
    cfg["n"] = rc.n;
    cfg["alpha"] = rc.alpha ? ordered_json(*rc.alpha) : ordered_json(nullptr);
    cfg["JS"] = rc.js;
    cfg["t"] = rc.t;
    cfg["a"] = rc.a;
    cfg["num_k"] = rc.num_k ? ordered_json(*rc.num_k) : ordered_json(nullptr);
    cfg["pair"] = rc.pair;
    cfg["rmax"] = rc.rmax;
    cfg["eta"] = rc.eta;
    cfg["format"] = rc.format;
    return ordered_json{{"tool", "flatex"}, {"version", kVersion}, {"command", command}, {"config", cfg}};
}

void emit(const RunConfig& rc, const io::Table& t, ordered_json meta) {
    io::write_output(rc.out, io::render(t, io::parse_format(rc.format)));
    io::write_metadata(rc.out, meta);
}

void warn_zero_js(const ChainSpec& s) {
    if (s.js == 0.0) std::cerr << "warning: JS = 0, the electrons decouple from the spins and every J vanishes\n";
}

// --- subcommands -------------------------------------------------------------------

void cmd_bands(const RunConfig& rc) {
    const ChainSpec s = chain_spec(rc);
    const int nk = rc.num_k.value_or(256);
    const auto up = diagonalize_bands(s, Spin::Up, nk);
    const auto dn = diagonalize_bands(s, Spin::Down, nk);
    const auto gap = gap_delta(up, dn);
    auto meta = base_metadata("bands", rc);
    meta["spec"] = io::to_json(s);
    meta["num_k"] = nk;
    meta["flat_band"] = {{"up", {{"index", up.flat_band}, {"deviation", up.flat_deviation}}},
                         {"down", {{"index", dn.flat_band}, {"deviation", dn.flat_deviation}}}};
    meta["gap"] = {{"delta", gap.delta}, {"gapless", gap.gapless}};
    if (gap.closed_form) meta["gap"]["closed_form"] = *gap.closed_form;
    emit(rc, io::bands_table(up, dn), meta);
}

void cmd_cls(const RunConfig& rc) {
    const ChainSpec s = chain_spec(rc);
    const auto cls = construct_cls(s);
    auto meta = base_metadata("cls", rc);
    meta["spec"] = io::to_json(cls.spec);
    meta["normalization"] = cls.normalization;
    meta["residual"] = cls_residual(cls);
    emit(rc, io::cls_table(cls), meta);
}

ordered_json curve_metadata(const CouplingTable& ct) {
    int conv = 0, unconv = 0, unres = 0;
    for (const auto& e : ct.entries) {
        if (e.status == EntryStatus::Converged) ++conv;
        else if (e.status == EntryStatus::Unconverged) ++unconv;
        else ++unres;
    }
    return ordered_json{{"spec", io::to_json(ct.spec)},
                        {"pair", to_string(ct.pair)},
                        {"num_k", ct.num_k},
                        {"num_k_check", ct.num_k_check},
                        {"converged", conv},
                        {"unconverged", unconv},
                        {"unresolved", unres},
                        {"excluded_pairs", ct.excluded_pairs},
                        {"max_imag_residue", ct.max_imag_residue}};
}

void cmd_couplings(const RunConfig& rc) {
    const ChainSpec s = chain_spec(rc);
    warn_zero_js(s);
    const auto cfg = compute_config(rc, 1024);
    const auto ct = coupling_curve(s, parse_pair(rc.pair), rc.rmax, cfg, rc.contributions);
    auto meta = base_metadata("couplings", rc);
    meta["compute"] = io::to_json(cfg);
    meta["curve"] = curve_metadata(ct);
    emit(rc, io::couplings_table(ct), meta);
    if (rc.contributions) {
        if (rc.out.empty() || rc.out == "-") throw ValidationError("--contributions needs --out");
        io::write_output(rc.out + ".contributions." + rc.format,
                         io::render(io::contributions_table(ct), io::parse_format(rc.format)));
    }
}

void cmd_qmetric(const RunConfig& rc) {
    const ChainSpec s = chain_spec(rc);
    const int nk = rc.num_k.value_or(1024);
    const auto q = quantum_metric(s, nk);
    auto meta = base_metadata("qmetric", rc);
    meta["spec"] = io::to_json(q.spec);
    meta["num_k"] = nk;
    meta["g_avg_over_a2"] = q.g_avg_over_a2();
    meta["error_estimate"] = q.error_estimate;
    meta["refined_intervals"] = q.refined_intervals;
    meta["converged"] = q.converged();
    if (s.family == Family::Stub && s.n == 1) meta["closed_form"] = sb1_metric_closed_form(s.ab_ratio(), 1.0);
    if (!q.converged()) std::cerr << "warning: metric average not converged; increase --num-k\n";
    emit(rc, io::qm_table(q), meta);
}

void cmd_fit(const RunConfig& rc) {
    if (rc.input.empty()) throw ValidationError("fit needs --input");
    const auto rows = io::parse_couplings(io::read_table_file(rc.input));
    const auto ct = io::coupling_table_from_rows(rows, rc.select_n);
    FitOptions fo;
    fo.r_min = rc.fit_rmin;
    fo.r_max = rc.fit_rmax;
    const auto f = fit_decay(ct, parse_fit_model(rc.model), fo);
    ordered_json j = io::to_json(f);
    j["spec"] = io::to_json(ct.spec);
    j["pair"] = to_string(ct.pair);
    io::write_output(rc.out, j.dump(2) + "\n");
    auto meta = base_metadata("fit", rc);
    meta["input"] = rc.input;
    meta["model"] = rc.model;
    io::write_metadata(rc.out, meta);
}

void cmd_scan(const RunConfig& rc) {
    const auto cfg = compute_config(rc, 256);
    const auto res = amplification_scan(parse_grid(rc.alpha_grid), parse_grid(rc.js_grid), cfg, rc.t_ev);
    auto meta = base_metadata("scan", rc);
    meta["compute"] = io::to_json(cfg);
    meta["grid"] = io::scan_grid_metadata(res);
    emit(rc, io::scan_table(res), meta);
}

void cmd_asymptotic(const RunConfig& rc) {
    const ChainSpec s = chain_spec(rc);
    const SitePair bb{Sublattice::B, Sublattice::B};
    std::string regime = rc.regime;
    if (regime == "auto") {
        if (s.family == Family::Diamond) regime = "diamond_powerlaw";
        else regime = s.ab_ratio() >= std::abs(s.js) ? "stub_fbfb" : "stub_dispersive";
    }
    if (s.n != 1) throw ValidationError("closed forms exist only for n = 1");
    if ((regime == "diamond_powerlaw") != (s.family == Family::Diamond))
        throw ValidationError("regime '" + regime + "' does not match family " + to_string(s.family));

    CouplingTable ct;
    ct.spec = s;
    ct.pair = bb;
    for (const auto& op : allowed_separations(s, bb, rc.rmax)) {
        if (op.R <= 0.0) continue;
        asymptotic::Prediction p;
        const double alpha = s.ab_ratio();
        if (regime == "stub_fbfb") p = asymptotic::stub_fbfb(alpha, s.js / s.t, op.R / s.a);
        else if (regime == "stub_dispersive") p = asymptotic::stub_dispersive(alpha, s.js / s.t, op.R / s.a);
        else if (regime == "diamond_powerlaw") p = asymptotic::diamond_powerlaw(s.js / s.t, op.R / s.a);
        else throw ValidationError("unknown regime '" + regime + "'");
        CouplingEntry e;
        e.R = op.R;
        e.J = p.J * s.t;
        e.status = p.valid ? EntryStatus::Converged : EntryStatus::Unconverged;
        ct.entries.push_back(e);
    }
    auto meta = base_metadata("asymptotic", rc);
    meta["regime"] = regime;
    meta["converged_flag_meaning"] = "1 inside the validity region, 0 outside";
    emit(rc, io::couplings_table(ct), meta);
}

// --- reproduce ---------------------------------------------------------------------------

void write_file(const std::filesystem::path& p, const io::Table& t, const ordered_json& meta, io::Format f) {
    io::write_output(p.string(), io::render(t, f));
    io::write_metadata(p.string(), meta);
}

void cmd_reproduce(const RunConfig& rc) {
    static const std::vector<std::string> figures = {"fig2", "fig3a", "fig3b", "fig4", "fig5"};
    if (std::find(figures.begin(), figures.end(), rc.figure) == figures.end())
        throw ValidationError("unknown figure '" + rc.figure + "' (fig2|fig3a|fig3b|fig4|fig5)");
    if (rc.out.empty() || rc.out == "-") throw ValidationError("reproduce needs --out <directory>");
    const std::filesystem::path dir(rc.out);
    std::filesystem::create_directories(dir);
    const auto fmt = io::parse_format(rc.format);
    const std::string ext = "." + rc.format;
    auto meta = base_metadata("reproduce " + rc.figure, rc);

    if (rc.figure == "fig2") {
        const auto cfg = compute_config(rc, 1024);
        std::vector<std::pair<std::string, ChainSpec>> chains = {{"stub_alpha0.1", stub(1, 0.1, 1.0)},
                                                                 {"stub_alpha0.3", stub(1, 0.3, 1.0)},
                                                                 {"stub_alpha1", stub(1, 1.0, 1.0)},
                                                                 {"diamond", diamond(1, 1.0)}};
        for (const auto& [name, spec] : chains) {
            io::Table all;
            ordered_json m = meta;
            m["compute"] = io::to_json(cfg);
            for (const char* p : {"BB", "BC", "CC"}) {
                const auto ct = coupling_curve(spec, parse_pair(p), 40.0, cfg);
                io::append_rows(all, io::couplings_table(ct));
                m["curves"].push_back(curve_metadata(ct));
            }
            write_file(dir / ("fig2_" + name + ext), all, m, fmt);
        }
    } else if (rc.figure == "fig3a") {
        StudyConfig sc;
        sc.compute = compute_config(rc, 256);
        io::Table all;
        io::Table fits{{"n", "A", "A_error", "xi", "xi_error", "r_min", "r_max", "points", "r_squared", "J_nn"}, {}};
        ordered_json m = meta;
        m["compute"] = io::to_json(sc.compute);
        for (int n = 1; n <= 20; ++n) {
            const ChainSpec spec = stub(n, 0.3, 0.1);
            const int cells = std::min(sc.max_cells, sc.compute.num_k / 2 - 1);
            const auto ct = coupling_curve(spec, {Sublattice::B, Sublattice::B}, cells * spec.cell_length(), sc.compute);
            io::append_rows(all, io::couplings_table(ct));
            m["curves"].push_back(curve_metadata(ct));
            double j_nn = 0.0;
            for (const auto& e : ct.entries)
                if (e.cell == 1) j_nn = e.J;
            try {
                const auto f = fit_decay(ct, FitModel::Exponential);
                fits.rows.push_back({io::fmt(n), io::fmt(f.amplitude), io::fmt(f.amplitude_error), io::fmt(f.xi),
                                     io::fmt(f.xi_error), io::fmt(f.r_min), io::fmt(f.r_max), io::fmt(f.points),
                                     io::fmt(f.r_squared), io::fmt(j_nn)});
            } catch (const FitError& e) {
                fits.rows.push_back({io::fmt(n), "", "", "", "", "", "", "", "", io::fmt(j_nn)});
                std::cerr << "warning: n = " << n << ": " << e.what() << '\n';
            }
        }
        write_file(dir / ("fig3a_couplings" + ext), all, m, fmt);
        write_file(dir / ("fig3a_fits" + ext), fits, meta, fmt);
    } else if (rc.figure == "fig3b") {
        const auto cfg = compute_config(rc, 4096);
        for (int n : {1, 2, 4}) {
            const ChainSpec spec = diamond(n, 0.5);
            const auto ct = coupling_curve(spec, {Sublattice::B, Sublattice::B}, 300.0, cfg);
            std::vector<std::optional<double>> overlay;
            for (const auto& e : ct.entries)
                overlay.push_back(e.R > 0 ? std::optional(asymptotic::diamond_powerlaw(0.5, e.R).J) : std::nullopt);
            ordered_json m = meta;
            m["compute"] = io::to_json(cfg);
            m["curve"] = curve_metadata(ct);
            m["overlay"] = "-3 t^2 / (2 pi JS R^4), the n = 1 large-distance law";
            write_file(dir / ("fig3b_diamond_n" + std::to_string(n) + ext), io::couplings_table(ct, &overlay), m, fmt);
        }
    } else if (rc.figure == "fig4") {
        const auto cfg = compute_config(rc, 256);
        const auto res = amplification_scan(parse_grid(rc.alpha_grid), parse_grid(rc.js_grid), cfg, rc.t_ev.value_or(1.0));
        ordered_json m = meta;
        m["compute"] = io::to_json(cfg);
        m["grid"] = io::scan_grid_metadata(res);
        write_file(dir / ("fig4_scan" + ext), io::scan_table(res), m, fmt);
    } else {
        StudyConfig sc;
        sc.compute = compute_config(rc, 256);
        io::Table all;
        std::vector<int> ns;
        for (int n = 1; n <= 20; ++n) ns.push_back(n);
        for (double alpha : {0.1, 0.3, 0.5, 1.0}) {
            const auto rows = xi_vs_g_study(alpha, ns, 0.1, sc);
            for (const auto& r : rows)
                if (!r.fit) std::cerr << "warning: alpha = " << alpha << ", n = " << r.n << ": " << r.error << '\n';
            io::append_rows(all, io::xi_vs_g_table(alpha, 0.1, rows));
        }
        ordered_json m = meta;
        m["compute"] = io::to_json(sc.compute);
        m["metric_num_k"] = sc.metric_num_k;
        write_file(dir / ("fig5_xi_vs_g" + ext), all, m, fmt);
    }
}

void add_chain_options(CLI::App* app, RunConfig& rc) {
    app->add_option("--family", rc.family, "stub | diamond")->capture_default_str();
    app->add_option("--n", rc.n, "dilution index n >= 1")->capture_default_str();
    app->add_option("--alpha", rc.alpha, "stub hopping ratio (stub only, default 1)");
    app->add_option("--js", rc.js, "exchange JS in units of t")->capture_default_str();
    app->add_option("--t", rc.t, "hopping t")->capture_default_str();
}

void add_common_options(CLI::App* app, RunConfig& rc) {
    app->add_option("--num-k", rc.num_k, "number of k points / cells");
    app->add_option("--format", rc.format, "csv | json")->capture_default_str();
    app->add_option("--out", rc.out, "output file ('-' for stdout)")->capture_default_str();
    app->add_option("--config", rc.config, "JSON config file; its keys override flags");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flat-band spin chains: bands, exchange couplings, quantum metric"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    RunConfig rc;

    auto* bands = app.add_subcommand("bands", "band structure of both spin sectors");
    add_chain_options(bands, rc);
    add_common_options(bands, rc);

    auto* cls = app.add_subcommand("cls", "compact localized state and its residual");
    add_chain_options(cls, rc);
    add_common_options(cls, rc);

    auto* couplings = app.add_subcommand("couplings", "J_ab(R) curve with convergence flags");
    add_chain_options(couplings, rc);
    add_common_options(couplings, rc);
    couplings->add_option("--pair", rc.pair, "orbital pair, e.g. BB, BC, CC")->capture_default_str();
    couplings->add_option("--rmax", rc.rmax, "largest separation, units of a")->capture_default_str();
    couplings->add_option("--eta", rc.eta, "oracle broadening")->capture_default_str();
    couplings->add_flag("--contributions", rc.contributions, "also write band-resolved I_pq");

    auto* qmetric = app.add_subcommand("qmetric", "flat-band quantum metric g(k) and its average");
    add_chain_options(qmetric, rc);
    add_common_options(qmetric, rc);

    auto* fit = app.add_subcommand("fit", "fit a decay law to a couplings table");
    fit->add_option("--input", rc.input, "couplings CSV or JSON")->required();
    fit->add_option("--model", rc.model, "exponential | powerlaw | exponential_sqrt")->capture_default_str();
    fit->add_option("--select-n", rc.select_n, "use only rows with this n");
    fit->add_option("--fit-rmin", rc.fit_rmin, "lower window bound, units of a");
    fit->add_option("--fit-rmax", rc.fit_rmax, "upper window bound, units of a");
    fit->add_option("--out", rc.out, "output JSON ('-' for stdout)")->capture_default_str();
    fit->add_option("--config", rc.config, "JSON config file");

    auto* scan = app.add_subcommand("scan", "amplification ratio over an (alpha, JS) grid");
    scan->add_option("--alpha-grid", rc.alpha_grid, "comma separated values in (0, 2]")->capture_default_str();
    scan->add_option("--js-grid", rc.js_grid, "comma separated values in (0, 2]")->capture_default_str();
    scan->add_option("--t-ev", rc.t_ev, "t in eV for Kelvin columns");
    add_common_options(scan, rc);

    auto* asym = app.add_subcommand("asymptotic", "closed-form J_BB(R) overlay for n = 1");
    add_chain_options(asym, rc);
    add_common_options(asym, rc);
    asym->add_option("--rmax", rc.rmax, "largest separation, units of a")->capture_default_str();
    asym->add_option("--regime", rc.regime, "auto | stub_fbfb | stub_dispersive | diamond_powerlaw")
        ->capture_default_str();

    auto* repro = app.add_subcommand("reproduce", "data bundle for one figure");
    repro->add_option("figure", rc.figure, "fig2 | fig3a | fig3b | fig4 | fig5")->required();
    add_common_options(repro, rc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_config_file(rc);
        if (*bands) cmd_bands(rc);
        else if (*cls) cmd_cls(rc);
        else if (*couplings) cmd_couplings(rc);
        else if (*qmetric) cmd_qmetric(rc);
        else if (*fit) cmd_fit(rc);
        else if (*scan) cmd_scan(rc);
        else if (*asym) cmd_asymptotic(rc);
        else if (*repro) cmd_reproduce(rc);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
