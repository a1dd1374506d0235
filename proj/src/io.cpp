#include "loyalty/io.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include "json.hpp"
#include "loyalty/error.hpp"

namespace loyalty {

namespace {

using nlohmann::json;

double number_field(const json& obj, const char* key) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw Error(ErrorCode::MalformedInstance, std::string("missing numeric field '") + key + "'");
    return obj[key].get<double>();
}

}  // namespace

Instance instance_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedInstance, std::string("instance is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::MalformedInstance, "instance must be a JSON object");
    Instance inst;
    if (!doc.contains("n_max") || !doc["n_max"].is_number_integer())
        throw Error(ErrorCode::MalformedInstance, "missing integer field 'n_max'");
    inst.n_max = doc["n_max"].get<int>();
    if (!doc.contains("types") || !doc["types"].is_array())
        throw Error(ErrorCode::MalformedInstance, "missing array field 'types'");
    for (const json& t : doc["types"]) {
        if (!t.is_object()) throw Error(ErrorCode::MalformedInstance, "type entries must be objects");
        TypeSpec spec;
        if (!t.contains("link") || !t["link"].is_string())
            throw Error(ErrorCode::MalformedInstance, "missing string field 'link'");
        try {
            spec.link = parse_link(t["link"].get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedInstance, e.what());
        }
        spec.b1 = t.contains("b1") ? number_field(t, "b1") : 0.0;
        spec.b2 = t.contains("b2") ? number_field(t, "b2") : 0.0;
        spec.baseline = number_field(t, "baseline");
        if (t.contains("box")) {
            const json& b = t["box"];
            if (!b.is_object()) throw Error(ErrorCode::MalformedInstance, "'box' must be an object");
            spec.box = {number_field(b, "b1_lo"), number_field(b, "b1_hi"), number_field(b, "b2_lo"),
                        number_field(b, "b2_hi")};
        }
        inst.types.push_back(spec);
    }
    if (!doc.contains("rho") || !doc["rho"].is_array())
        throw Error(ErrorCode::MalformedInstance, "missing array field 'rho'");
    for (const json& r : doc["rho"]) {
        if (!r.is_number()) throw Error(ErrorCode::MalformedInstance, "rho entries must be numbers");
        inst.rho.push_back(r.get<double>());
    }
    check_instance_shape(inst);
    return inst;
}

std::string instance_to_json(const Instance& instance) {
    nlohmann::ordered_json doc;
    doc["n_max"] = instance.n_max;
    auto& types = doc["types"] = nlohmann::ordered_json::array();
    const ParamBox defaults{};
    for (const TypeSpec& t : instance.types) {
        nlohmann::ordered_json row;
        row["link"] = std::string(link_name(t.link));
        row["b1"] = t.b1;
        row["b2"] = t.b2;
        row["baseline"] = t.baseline;
        const ParamBox& b = t.box;
        if (b.b1_lo != defaults.b1_lo || b.b1_hi != defaults.b1_hi || b.b2_lo != defaults.b2_lo ||
            b.b2_hi != defaults.b2_hi)
            row["box"] = {{"b1_lo", b.b1_lo}, {"b1_hi", b.b1_hi}, {"b2_lo", b.b2_lo}, {"b2_hi", b.b2_hi}};
        types.push_back(std::move(row));
    }
    doc["rho"] = instance.rho;
    return doc.dump(2);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Instance read_instance_file(const std::filesystem::path& path) { return instance_from_json(read_text_file(path)); }

std::vector<SampleSet> read_samples_csv(std::istream& is, std::size_t k) {
    std::vector<SampleSet> out(k);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find_first_not_of("0123456789,-. ") != std::string::npos) continue;
        std::istringstream row(line);
        long long type = -1, tau = -1, x = -1;
        char c1 = 0, c2 = 0;
        if (!(row >> type >> c1 >> tau >> c2 >> x) || c1 != ',' || c2 != ',' || type < 0 || tau < 0 ||
            (x != 0 && x != 1))
            throw Error(ErrorCode::OutOfRange, "bad sample row " + std::to_string(lineno) + ": '" + line + "'");
        if (static_cast<std::size_t>(type) >= out.size()) out.resize(static_cast<std::size_t>(type) + 1);
        out[static_cast<std::size_t>(type)].add(static_cast<int>(tau), x == 1);
    }
    return out;
}

}  // namespace loyalty
