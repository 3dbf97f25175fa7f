#include "memcap/io.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "memcap/errors.hpp"

namespace memcap {

namespace {

using nlohmann::json;

Complex parse_entry(const json& entry, const std::string& path) {
    if (entry.is_number()) return Complex(entry.get<double>(), 0.0);
    if (entry.is_array() && entry.size() == 2 && entry[0].is_number() && entry[1].is_number())
        return Complex(entry[0].get<double>(), entry[1].get<double>());
    throw SchemaError("matrix entry must be a number or an [re, im] pair", path);
}

Matrix parse_matrix(const json& rows, const std::string& path) {
    if (!rows.is_array() || rows.empty())
        throw SchemaError("matrix must be a nonempty array of rows", path);
    const std::size_t n_rows = rows.size();
    std::size_t n_cols = 0;
    Matrix out;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const json& row = rows[r];
        if (!row.is_array() || row.empty())
            throw SchemaError("matrix row must be a nonempty array", path);
        if (r == 0) {
            n_cols = row.size();
            out.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
        } else if (row.size() != n_cols) {
            throw SchemaError("matrix rows have inconsistent lengths", path);
        }
        for (std::size_t c = 0; c < n_cols; ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_entry(row[c], path + "[" + std::to_string(r) + "][" + std::to_string(c) +
                                        "]");
    }
    return out;
}

std::vector<MatrixTap> parse_taps(const json& taps, const char* index_key,
                                  const std::string& path) {
    if (!taps.is_array() || taps.empty())
        throw SchemaError("taps must be a nonempty array", path);
    std::vector<MatrixTap> out;
    out.reserve(taps.size());
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const std::string tap_path = path + "[" + std::to_string(i) + "]";
        const json& tap = taps[i];
        if (!tap.is_object() || !tap.contains(index_key) || !tap.contains("matrix"))
            throw SchemaError(std::string("tap needs '") + index_key + "' and 'matrix'",
                              tap_path);
        if (!tap[index_key].is_number_integer())
            throw SchemaError(std::string("'") + index_key + "' must be an integer", tap_path);
        out.push_back({tap[index_key].get<int>(), parse_matrix(tap["matrix"], tap_path)});
    }
    return out;
}

json emit_matrix(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

json emit_taps(const std::vector<MatrixTap>& taps, const char* index_key) {
    json out = json::array();
    for (const auto& tap : taps)
        out.push_back({{index_key, tap.delay}, {"matrix", emit_matrix(tap.coeff)}});
    return out;
}

double parse_budget(const json& value, const std::string& path) {
    if (!value.is_number())
        throw SchemaError("budget must be a number", path);
    const double v = value.get<double>();
    if (!(v >= 0.0) || !std::isfinite(v))
        throw SchemaError("budget must be finite and nonnegative", path);
    return v;
}

std::vector<ConstraintChannel> parse_coupled(const json& list, const char* limit_key,
                                             int n_tx, const std::string& path) {
    std::vector<ConstraintChannel> out;
    if (!list.is_array()) throw SchemaError("must be an array", path);
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string entry_path = path + "[" + std::to_string(i) + "]";
        const json& entry = list[i];
        if (!entry.is_object() || !entry.contains("taps") || !entry.contains(limit_key))
            throw SchemaError(std::string("entry needs 'taps' and '") + limit_key + "'",
                              entry_path);
        ConstraintChannel cc;
        cc.taps = parse_taps(entry["taps"], "delay", entry_path + ".taps");
        cc.n_out = static_cast<int>(cc.taps.front().coeff.rows());
        for (const auto& tap : cc.taps)
            if (tap.coeff.rows() != cc.n_out || tap.coeff.cols() != n_tx)
                throw SchemaError("factor taps must all be n_k x n_tx", entry_path + ".taps");
        cc.limit = parse_budget(entry[limit_key], entry_path + "." + limit_key);
        out.push_back(std::move(cc));
    }
    return out;
}

} // namespace

ProblemSpec parse_spec_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("spec must be a JSON object", "$");
    if (!doc.contains("channel") || !doc["channel"].is_object())
        throw SchemaError("missing 'channel' section", "channel");
    if (!doc.contains("noise") || !doc["noise"].is_object())
        throw SchemaError("missing 'noise' section", "noise");

    ProblemSpec spec;
    const json& ch = doc["channel"];
    if (!ch.contains("n_tx") || !ch.contains("n_rx") || !ch["n_tx"].is_number_integer() ||
        !ch["n_rx"].is_number_integer())
        throw SchemaError("channel needs integer 'n_tx' and 'n_rx'", "channel");
    spec.channel.n_tx = ch["n_tx"].get<int>();
    spec.channel.n_rx = ch["n_rx"].get<int>();
    if (!ch.contains("taps")) throw SchemaError("channel needs 'taps'", "channel.taps");
    spec.channel.h_taps = parse_taps(ch["taps"], "delay", "channel.taps");
    if (!doc["noise"].contains("taps")) throw SchemaError("noise needs 'taps'", "noise.taps");
    spec.channel.noise_taps = parse_taps(doc["noise"]["taps"], "lag", "noise.taps");
    spec.channel.validate();

    if (doc.contains("constraints")) {
        const json& cons = doc["constraints"];
        if (!cons.is_object()) throw SchemaError("constraints must be an object", "constraints");
        if (cons.contains("tpc")) spec.tpc = parse_budget(cons["tpc"], "constraints.tpc");
        if (cons.contains("pac")) {
            if (!cons["pac"].is_array())
                throw SchemaError("pac must be an array of budgets", "constraints.pac");
            std::vector<double> pac;
            for (std::size_t i = 0; i < cons["pac"].size(); ++i)
                pac.push_back(
                    parse_budget(cons["pac"][i], "constraints.pac[" + std::to_string(i) + "]"));
            if (static_cast<int>(pac.size()) != spec.channel.n_tx)
                throw SchemaError("pac needs one budget per transmit antenna",
                                  "constraints.pac");
            spec.pac = std::move(pac);
        }
        if (cons.contains("ipc"))
            spec.ipc = parse_coupled(cons["ipc"], "limit", spec.channel.n_tx, "constraints.ipc");
        if (cons.contains("ehc"))
            spec.ehc = parse_coupled(cons["ehc"], "floor", spec.channel.n_tx, "constraints.ehc");
    }
    if (!spec.tpc && !spec.pac)
        throw SchemaError("unbounded problem: need at least one of tpc/pac", "constraints");

    if (doc.contains("grid")) {
        if (!doc["grid"].is_object() || !doc["grid"].contains("N") ||
            !doc["grid"]["N"].is_number_integer())
            throw SchemaError("grid section needs integer 'N'", "grid.N");
        spec.grid_n = doc["grid"]["N"].get<int>();
        if (spec.grid_n < 1) throw SchemaError("grid.N must be >= 1", "grid.N");
    }
    return spec;
}

ProblemSpec parse_spec_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open spec file " + path.string(), "$");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what(), "$");
    }
    return parse_spec_json(doc);
}

json emit_spec_json(const ProblemSpec& spec) {
    json doc;
    doc["channel"] = {{"n_tx", spec.channel.n_tx},
                      {"n_rx", spec.channel.n_rx},
                      {"taps", emit_taps(spec.channel.h_taps, "delay")}};
    doc["noise"] = {{"taps", emit_taps(spec.channel.noise_taps, "lag")}};
    json cons = json::object();
    if (spec.tpc) cons["tpc"] = *spec.tpc;
    if (spec.pac) cons["pac"] = *spec.pac;
    if (!spec.ipc.empty()) {
        json list = json::array();
        for (const auto& c : spec.ipc)
            list.push_back({{"taps", emit_taps(c.taps, "delay")}, {"limit", c.limit}});
        cons["ipc"] = std::move(list);
    }
    if (!spec.ehc.empty()) {
        json list = json::array();
        for (const auto& c : spec.ehc)
            list.push_back({{"taps", emit_taps(c.taps, "delay")}, {"floor", c.limit}});
        cons["ehc"] = std::move(list);
    }
    doc["constraints"] = std::move(cons);
    doc["grid"] = {{"N", spec.grid_n}};
    return doc;
}

ConstraintSet evaluate_constraints(const ProblemSpec& spec, const FrequencyGrid& grid) {
    ConstraintSet cs;
    cs.tpc = spec.tpc;
    cs.pac = spec.pac;
    auto eval = [&](const ConstraintChannel& cc) {
        LinearPowerConstraint out;
        out.limit = cc.limit;
        out.factors.reserve(grid.size());
        for (double theta : grid.nodes)
            out.factors.push_back(dtft(cc.taps, theta, cc.n_out, spec.channel.n_tx));
        return out;
    };
    for (const auto& c : spec.ipc) cs.ipc.push_back(eval(c));
    for (const auto& c : spec.ehc) cs.ehc.push_back(eval(c));
    return cs;
}

std::string config_hash(const ProblemSpec& spec) {
    const std::string dump = emit_spec_json(spec).dump();
    std::uint64_t hash = 0xcbf29ce484222325ull; // FNV-1a
    for (unsigned char ch : dump) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << hash;
    return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace memcap
