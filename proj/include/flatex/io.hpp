#pragma once

// Plot-ready tables and their parsers.
//
// Every output is a Table (named columns, string cells) written either as CSV
// or as JSON {"columns": [...], "rows": [[...], ...]}. Numbers are printed in
// shortest round-trip form, so identical inputs give identical bytes and a
// parse/print cycle is lossless. Empty cells mean "null".
//
// Schemas
//   bands          k, band_index, sector, energy
//   couplings      family, n, alpha, JS, pair, R_over_a, J_over_t, converged_flag [, J_asymptotic_over_t]
//   contributions  family, n, alpha, JS, pair, R_over_a, p, q, I_pq
//   qm             k, g_over_a2; last row has k = "mean"
//   cls            cell, slot, sublattice, amplitude
//   scan           alpha, JS, J10_a10, J1_a, J1_10a, r, r_same_distance, J10_a10_K, J1_10a_K
//   xi_vs_g        alpha, JS, n, g_over_a2, sqrt_g, xi, xi_error, A, local_slope
// converged_flag: 1 converged, 0 not converged, -1 below the coupling floor.

#include "flatex/analysis.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iostream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace flatex::io {

using nlohmann::ordered_json;

enum class Format { Csv, Json };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw ValidationError("unknown format '" + s + "' (csv|json)");
}

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("not a number: '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("not an integer: '" + s + "'");
    return v;
}

inline std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ValidationError("missing column '" + name + "'");
    }
    bool has_column(const std::string& name) const {
        return std::find(columns.begin(), columns.end(), name) != columns.end();
    }
    bool operator==(const Table&) const = default;
};

inline void write_csv(std::ostream& os, const Table& t) {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
}

inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(l);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(is, line)) throw ValidationError("empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.columns = split(line);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.columns.size())
            throw ValidationError("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(t.columns.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

namespace detail {
inline ordered_json cell_to_json(const std::string& s) {
    if (s.empty()) return nullptr;
    int i = 0;
    auto [pi, ei] = std::from_chars(s.data(), s.data() + s.size(), i);
    if (ei == std::errc() && pi == s.data() + s.size()) return i;
    double d = 0.0;
    auto [pd, ed] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ed == std::errc() && pd == s.data() + s.size() && std::isfinite(d)) return d;
    return s;
}
inline std::string cell_from_json(const ordered_json& j) {
    if (j.is_null()) return {};
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    if (j.is_number()) return fmt(j.get<double>());
    if (j.is_string()) return j.get<std::string>();
    throw ValidationError("unsupported JSON cell");
}
} // namespace detail

inline ordered_json to_json(const Table& t) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : t.rows) {
        ordered_json row = ordered_json::array();
        for (const auto& c : r) row.push_back(detail::cell_to_json(c));
        rows.push_back(std::move(row));
    }
    return ordered_json{{"columns", t.columns}, {"rows", std::move(rows)}};
}

inline Table table_from_json(const ordered_json& j) {
    Table t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
        std::vector<std::string> row;
        for (const auto& c : r) row.push_back(detail::cell_from_json(c));
        if (row.size() != t.columns.size()) throw ValidationError("JSON row width mismatch");
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_table(std::ostream& os, const Table& t, Format f) {
    if (f == Format::Csv)
        write_csv(os, t);
    else
        os << to_json(t).dump(1) << '\n';
}

/// Detects the encoding from the first non-blank character.
inline Table read_table(std::istream& is) {
    while (std::isspace(is.peek())) is.get();
    if (is.peek() == '{') {
        try {
            return table_from_json(ordered_json::parse(is));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("malformed JSON table: ") + e.what());
        }
    }
    return read_csv(is);
}

inline Table read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_table(in);
}

// --- ChainSpec / configs ------------------------------------------------------------

inline ordered_json to_json(const ChainSpec& s) {
    ordered_json j{{"family", to_string(s.family)}, {"n", s.n}};
    j["alpha"] = s.alpha ? ordered_json(*s.alpha) : ordered_json(nullptr);
    j["t"] = s.t;
    j["JS"] = s.js;
    j["a"] = s.a;
    return j;
}

/// Missing keys take the defaults n = 1, t = 1, JS = 0, a = 1.
inline ChainSpec chain_spec_from_json(const ordered_json& j) {
    ChainSpec s;
    try {
        s.family = parse_family(j.at("family").get<std::string>());
        s.n = j.value("n", 1);
        if (j.contains("alpha") && !j["alpha"].is_null()) s.alpha = j["alpha"].get<double>();
        s.t = j.value("t", 1.0);
        s.js = j.value("JS", 0.0);
        s.a = j.value("a", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed chain spec: ") + e.what());
    }
    validate(s);
    return s;
}

inline ordered_json to_json(const ComputeConfig& c) {
    return ordered_json{{"num_k", c.num_k},
                        {"mu", c.mu},
                        {"temperature", c.temperature},
                        {"eta", c.eta},
                        {"degenerate_eps", c.degenerate_eps},
                        {"coupling_floor", c.coupling_floor}};
}

// --- bands ----------------------------------------------------------------------------

inline Table bands_table(const BandStructure& up, const BandStructure& down) {
    Table t{{"k", "band_index", "sector", "energy"}, {}};
    for (const BandStructure* bs : {&up, &down})
        for (int j = 0; j < bs->num_k(); ++j)
            for (int b = 0; b < bs->num_bands(); ++b)
                t.rows.push_back({fmt(bs->kmesh[j]), fmt(b), to_string(bs->sector), fmt(bs->energies(b, j))});
    return t;
}

struct BandRow {
    double k;
    int band_index;
    Spin sector;
    double energy;
};

inline std::vector<BandRow> parse_bands(const Table& t) {
    const auto ck = t.column("k"), cb = t.column("band_index"), cs = t.column("sector"), ce = t.column("energy");
    std::vector<BandRow> out;
    for (const auto& r : t.rows) out.push_back({parse_double(r[ck]), parse_int(r[cb]), parse_spin(r[cs]), parse_double(r[ce])});
    return out;
}

// --- couplings --------------------------------------------------------------------------

namespace detail {
inline std::vector<std::string> spec_cells(const ChainSpec& s, SitePair p) {
    return {to_string(s.family), fmt(s.n), s.family == Family::Stub ? fmt(s.ab_ratio()) : std::string(), fmt(s.js),
            to_string(p)};
}
} // namespace detail

/// Optional overlay: one value per entry (empty optional -> empty cell).
inline Table couplings_table(const CouplingTable& ct, const std::vector<std::optional<double>>* overlay = nullptr) {
    Table t{{"family", "n", "alpha", "JS", "pair", "R_over_a", "J_over_t", "converged_flag"}, {}};
    if (overlay) {
        if (overlay->size() != ct.entries.size()) throw ValidationError("overlay size mismatch");
        t.columns.push_back("J_asymptotic_over_t");
    }
    const auto head = detail::spec_cells(ct.spec, ct.pair);
    for (std::size_t i = 0; i < ct.entries.size(); ++i) {
        const auto& e = ct.entries[i];
        auto row = head;
        row.push_back(fmt(e.R / ct.spec.a));
        row.push_back(fmt(e.J / ct.spec.t));
        row.push_back(fmt(static_cast<int>(e.status)));
        if (overlay) row.push_back(fmt((*overlay)[i]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Appends rows of another couplings table with identical columns.
inline void append_rows(Table& into, const Table& from) {
    if (into.columns.empty()) into.columns = from.columns;
    if (into.columns != from.columns) throw ValidationError("cannot append tables with different columns");
    into.rows.insert(into.rows.end(), from.rows.begin(), from.rows.end());
}

struct CouplingRow {
    ChainSpec spec;
    SitePair pair;
    double R;
    double J;
    EntryStatus status;
    std::optional<double> asymptotic;
};

inline std::vector<CouplingRow> parse_couplings(const Table& t) {
    const auto cf = t.column("family"), cn = t.column("n"), ca = t.column("alpha"), cj = t.column("JS"),
               cp = t.column("pair"), cr = t.column("R_over_a"), cv = t.column("J_over_t"),
               cc = t.column("converged_flag");
    const bool has_overlay = t.has_column("J_asymptotic_over_t");
    std::vector<CouplingRow> out;
    for (const auto& r : t.rows) {
        CouplingRow row;
        row.spec.family = parse_family(r[cf]);
        row.spec.n = parse_int(r[cn]);
        if (!r[ca].empty()) row.spec.alpha = parse_double(r[ca]);
        row.spec.js = parse_double(r[cj]);
        row.pair = parse_pair(r[cp]);
        row.R = parse_double(r[cr]);
        row.J = parse_double(r[cv]);
        const int flag = parse_int(r[cc]);
        if (flag < -1 || flag > 1) throw ValidationError("converged_flag must be -1, 0 or 1");
        row.status = static_cast<EntryStatus>(flag);
        if (has_overlay) row.asymptotic = parse_optional(r[t.column("J_asymptotic_over_t")]);
        out.push_back(row);
    }
    return out;
}

/// Rebuilds a CouplingTable (lengths in a, energies in t) from parsed rows.
/// Rows must describe a single chain and pair unless `n_filter` selects one n.
inline CouplingTable coupling_table_from_rows(const std::vector<CouplingRow>& rows, std::optional<int> n_filter = {}) {
    CouplingTable ct;
    bool first = true;
    for (const auto& r : rows) {
        if (n_filter && r.spec.n != *n_filter) continue;
        if (first) {
            ct.spec = r.spec;
            ct.pair = r.pair;
            first = false;
        } else if (!(r.spec == ct.spec) || r.pair.a != ct.pair.a || r.pair.b != ct.pair.b) {
            throw ValidationError("couplings input mixes chains or pairs; select one with --n");
        }
        CouplingEntry e;
        e.R = r.R;
        e.J = r.J;
        e.J_check = r.J;
        e.status = r.status;
        ct.entries.push_back(e);
    }
    if (first) throw ValidationError("no coupling rows selected");
    return ct;
}

inline Table contributions_table(const CouplingTable& ct) {
    Table t{{"family", "n", "alpha", "JS", "pair", "R_over_a", "p", "q", "I_pq"}, {}};
    const auto head = detail::spec_cells(ct.spec, ct.pair);
    for (const auto& e : ct.entries)
        for (const auto& c : e.contributions) {
            auto row = head;
            row.insert(row.end(), {fmt(e.R / ct.spec.a), fmt(c.p), fmt(c.q), fmt(c.value / ct.spec.t)});
            t.rows.push_back(std::move(row));
        }
    return t;
}

// --- quantum metric -------------------------------------------------------------------

inline Table qm_table(const QuantumMetricResult& q) {
    Table t{{"k", "g_over_a2"}, {}};
    const double a2 = q.spec.a * q.spec.a;
    for (std::size_t j = 0; j < q.kmesh.size(); ++j) t.rows.push_back({fmt(q.kmesh[j]), fmt(q.g_samples[j] / a2)});
    t.rows.push_back({"mean", fmt(q.g_avg_over_a2())});
    return t;
}

struct QmData {
    std::vector<double> k;
    std::vector<double> g;
    double mean = 0.0;
};

inline QmData parse_qm(const Table& t) {
    const auto ck = t.column("k"), cg = t.column("g_over_a2");
    QmData d;
    bool have_mean = false;
    for (const auto& r : t.rows) {
        if (r[ck] == "mean") {
            d.mean = parse_double(r[cg]);
            have_mean = true;
        } else {
            d.k.push_back(parse_double(r[ck]));
            d.g.push_back(parse_double(r[cg]));
        }
    }
    if (!have_mean) throw ValidationError("qm table has no summary row");
    return d;
}

// --- CLS -----------------------------------------------------------------------------------

inline Table cls_table(const ClsVector& cls) {
    const UnitCell cell = build_unit_cell(cls.spec);
    Table t{{"cell", "slot", "sublattice", "amplitude"}, {}};
    for (const auto& e : cls.amplitudes)
        t.rows.push_back({fmt(e.cell), fmt(e.slot), to_string(cell.orbitals[e.slot].sublattice), fmt(e.amplitude)});
    return t;
}

inline std::vector<ClsAmplitude> parse_cls(const Table& t) {
    const auto cc = t.column("cell"), cs = t.column("slot"), ca = t.column("amplitude");
    std::vector<ClsAmplitude> out;
    for (const auto& r : t.rows) out.push_back({parse_int(r[cc]), parse_int(r[cs]), parse_double(r[ca])});
    return out;
}

// --- scan -------------------------------------------------------------------------------------

inline Table scan_table(const ScanResult& s) {
    Table t{{"alpha", "JS", "J10_a10", "J1_a", "J1_10a", "r", "r_same_distance", "J10_a10_K", "J1_10a_K"}, {}};
    for (const auto& c : s.cells)
        t.rows.push_back({fmt(c.alpha), fmt(c.js), fmt(c.j10_a10), fmt(c.j1_a), fmt(c.j1_10a), fmt(c.ratio),
                          fmt(c.ratio_same_distance), fmt(c.j10_a10_kelvin), fmt(c.j1_10a_kelvin)});
    return t;
}

inline std::vector<ScanCell> parse_scan(const Table& t) {
    std::vector<ScanCell> out;
    const auto col = [&](const char* n) { return t.column(n); };
    const auto ca = col("alpha"), cj = col("JS"), c10 = col("J10_a10"), c1 = col("J1_a"), c110 = col("J1_10a"),
               cr = col("r"), crs = col("r_same_distance"), ck10 = col("J10_a10_K"), ck1 = col("J1_10a_K");
    for (const auto& r : t.rows) {
        ScanCell c;
        c.alpha = parse_double(r[ca]);
        c.js = parse_double(r[cj]);
        c.j10_a10 = parse_double(r[c10]);
        c.j1_a = parse_double(r[c1]);
        c.j1_10a = parse_double(r[c110]);
        c.ratio = parse_optional(r[cr]);
        c.ratio_same_distance = parse_optional(r[crs]);
        c.j10_a10_kelvin = parse_optional(r[ck10]);
        c.j1_10a_kelvin = parse_optional(r[ck1]);
        out.push_back(c);
    }
    return out;
}

inline ordered_json scan_grid_metadata(const ScanResult& s) {
    ordered_json j{{"alpha_grid", s.alpha_grid}, {"JS_grid", s.js_grid}, {"layout", "alpha-major"}, {"num_k", s.num_k}};
    j["shape"] = {s.alpha_grid.size(), s.js_grid.size()};
    j["t_eV"] = s.t_ev ? ordered_json(*s.t_ev) : ordered_json(nullptr);
    return j;
}

// --- xi vs <g> ------------------------------------------------------------------------------------

inline Table xi_vs_g_table(double alpha, double js, const std::vector<XiVsGRow>& rows) {
    Table t{{"alpha", "JS", "n", "g_over_a2", "sqrt_g", "xi", "xi_error", "A", "local_slope"}, {}};
    for (const auto& r : rows) {
        const auto fit_cell = [&](double FitResult::*field) { return r.fit ? fmt((*r.fit).*field) : std::string(); };
        t.rows.push_back({fmt(alpha), fmt(js), fmt(r.n), fmt(r.g_avg), fmt(std::sqrt(r.g_avg)), fit_cell(&FitResult::xi),
                          fit_cell(&FitResult::xi_error), fit_cell(&FitResult::amplitude), fmt(r.local_slope)});
    }
    return t;
}

// --- fits ----------------------------------------------------------------------------------------

inline ordered_json to_json(const FitResult& f) {
    auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(fmt(v)); };
    return ordered_json{{"model", to_string(f.model)},
                        {"amplitude", num(f.amplitude)},
                        {"amplitude_error", num(f.amplitude_error)},
                        {"xi", num(f.xi)},
                        {"xi_error", num(f.xi_error)},
                        {"exponent", num(f.exponent)},
                        {"exponent_error", num(f.exponent_error)},
                        {"r_min", f.r_min},
                        {"r_max", f.r_max},
                        {"points", f.points},
                        {"residual_norm", num(f.residual_norm)},
                        {"r_squared", num(f.r_squared)},
                        {"accepted", f.accepted}};
}

inline FitResult fit_from_json(const ordered_json& j) {
    auto num = [&](const char* k) {
        const auto& v = j.at(k);
        return v.is_string() ? parse_double(v.get<std::string>()) : v.get<double>();
    };
    FitResult f;
    f.model = parse_fit_model(j.at("model").get<std::string>());
    f.amplitude = num("amplitude");
    f.amplitude_error = num("amplitude_error");
    f.xi = num("xi");
    f.xi_error = num("xi_error");
    f.exponent = num("exponent");
    f.exponent_error = num("exponent_error");
    f.r_min = num("r_min");
    f.r_max = num("r_max");
    f.points = j.at("points").get<int>();
    f.residual_norm = num("residual_norm");
    f.r_squared = num("r_squared");
    f.accepted = j.at("accepted").get<bool>();
    return f;
}

// --- files ------------------------------------------------------------------------------------------

/// Writes to `path`, or to stdout when path is empty or "-".
inline void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
}

inline std::string render(const Table& t, Format f) {
    std::ostringstream os;
    write_table(os, t, f);
    return os.str();
}

/// Sidecar <out>.meta.json next to a data file (skipped for stdout).
inline void write_metadata(const std::string& data_path, const ordered_json& meta) {
    if (data_path.empty() || data_path == "-") return;
    write_output(data_path + ".meta.json", meta.dump(2) + "\n");
}

} // namespace flatex::io
