#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "error.hpp"

namespace trussfa {

struct Material {
    double young_modulus = 0.0; // Pa
    double poisson_ratio = 0.0;
    double density = 0.0;       // kg/m^3
    double cross_area = 0.0;    // m^2

    friend bool operator==(const Material&, const Material&) = default;
};

struct Node {
    int id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Node&, const Node&) = default;
};

struct Bar {
    int id = 0;
    int node_i = 0;
    int node_j = 0;

    friend bool operator==(const Bar&, const Bar&) = default;
};

struct Support {
    int node = 0;
    bool fix_x = false;
    bool fix_y = false;

    friend bool operator==(const Support&, const Support&) = default;
};

/// Planar pin-jointed truss. Nodes and bars are stored in id order, so
/// node `k` lives at index `k - 1` (ids are contiguous from 1).
///
/// `bar_modulus` holds the effective elastic modulus per bar after damage;
/// empty means every bar uses `material.young_modulus`.
struct TrussModel {
    std::vector<Node> nodes;
    std::vector<Bar> bars;
    Material material;
    std::vector<Support> supports;
    std::vector<double> bar_modulus;

    const Node& node(int id) const { return nodes.at(static_cast<std::size_t>(id - 1)); }
    const Bar& bar(int id) const
    {
        if (id < 1 || id > static_cast<int>(bars.size()))
            throw ValidationError("unknown bar id " + std::to_string(id));
        return bars[static_cast<std::size_t>(id - 1)];
    }
    int bar_count() const { return static_cast<int>(bars.size()); }
    int node_count() const { return static_cast<int>(nodes.size()); }

    double effective_modulus(int bar_id) const
    {
        bar(bar_id);
        if (bar_modulus.empty())
            return material.young_modulus;
        return bar_modulus[static_cast<std::size_t>(bar_id - 1)];
    }

    int constrained_dof_count() const
    {
        int n = 0;
        for (const auto& s : supports)
            n += int(s.fix_x) + int(s.fix_y);
        return n;
    }
    int free_dof_count() const { return 2 * node_count() - constrained_dof_count(); }

    friend bool operator==(const TrussModel&, const TrussModel&) = default;
};

/// Per-bar stiffness-reduction fractions. Absent bar = undamaged.
struct DamageState {
    std::map<int, double> damage;
};

/// Euclidean length of a bar.
inline double bar_length(const TrussModel& model, int bar_id)
{
    const Bar& b = model.bar(bar_id);
    const Node& a = model.node(b.node_i);
    const Node& c = model.node(b.node_j);
    return std::hypot(c.x - a.x, c.y - a.y);
}

/// Throws ValidationError describing the first violated invariant.
inline void validate(const TrussModel& model)
{
    const Material& m = model.material;
    if (!(m.young_modulus > 0.0) || !(m.density > 0.0) || !(m.cross_area > 0.0))
        throw ValidationError("material: E, rho and A must be positive");
    if (!(m.poisson_ratio >= 0.0 && m.poisson_ratio < 0.5))
        throw ValidationError("material: poisson ratio must lie in [0, 0.5)");

    for (std::size_t k = 0; k < model.nodes.size(); ++k) {
        if (model.nodes[k].id != static_cast<int>(k) + 1)
            throw ValidationError("node ids must be unique and contiguous from 1");
        if (!std::isfinite(model.nodes[k].x) || !std::isfinite(model.nodes[k].y))
            throw ValidationError("node " + std::to_string(k + 1) + ": non-finite coordinate");
    }
    auto node_ok = [&](int id) { return id >= 1 && id <= model.node_count(); };
    for (std::size_t k = 0; k < model.bars.size(); ++k) {
        const Bar& b = model.bars[k];
        if (b.id != static_cast<int>(k) + 1)
            throw ValidationError("bar ids must be unique and contiguous from 1");
        if (!node_ok(b.node_i) || !node_ok(b.node_j))
            throw ValidationError("bar " + std::to_string(b.id) + " references an unknown node");
        if (b.node_i == b.node_j)
            throw ValidationError("bar " + std::to_string(b.id) + " connects a node to itself");
        if (!(bar_length(model, b.id) > 0.0))
            throw ValidationError("bar " + std::to_string(b.id) + " has zero length");
    }
    std::vector<bool> seen(model.nodes.size(), false);
    for (const auto& s : model.supports) {
        if (!node_ok(s.node))
            throw ValidationError("support references unknown node " + std::to_string(s.node));
        if (!s.fix_x && !s.fix_y)
            throw ValidationError("support at node " + std::to_string(s.node) + " constrains nothing");
        if (seen[static_cast<std::size_t>(s.node - 1)])
            throw ValidationError("duplicate support at node " + std::to_string(s.node));
        seen[static_cast<std::size_t>(s.node - 1)] = true;
    }
    if (model.constrained_dof_count() < 3)
        throw ValidationError("fewer than 3 constrained DOFs: rigid-body motion is free");
    if (!model.bar_modulus.empty() && model.bar_modulus.size() != model.bars.size())
        throw ValidationError("bar_modulus size does not match bar count");
}

/// The 13-bar gable truss used throughout the benchmark studies.
inline TrussModel benchmark_truss()
{
    TrussModel m;
    m.material = {2.0e11, 0.3, 7850.0, 4.0e-4};
    const double dx = 1.8288;
    const double h = 2.4284;
    for (int k = 0; k < 5; ++k)
        m.nodes.push_back({k + 1, dx * k, 0.0});
    m.nodes.push_back({6, dx, h / 2.0});
    m.nodes.push_back({7, 2.0 * dx, h});
    m.nodes.push_back({8, 3.0 * dx, h / 2.0});

    const int conn[13][2] = {{1, 2}, {2, 3}, {3, 4}, {4, 5}, // bottom chord
                             {1, 6}, {6, 7}, {7, 8}, {8, 5}, // top chord
                             {6, 2}, {7, 3}, {8, 4}, {6, 3}, {8, 3}};
    for (int k = 0; k < 13; ++k)
        m.bars.push_back({k + 1, conn[k][0], conn[k][1]});
    m.supports = {{1, true, true}, {5, false, true}};
    return m;
}

/// Bar e gets modulus E * (1 - d_e). Always computed from the pristine
/// material, so re-applying a state is a no-op. Mass is untouched.
inline TrussModel apply_damage(const TrussModel& model, const DamageState& state)
{
    TrussModel out = model;
    out.bar_modulus.assign(model.bars.size(), model.material.young_modulus);
    for (const auto& [id, d] : state.damage) {
        model.bar(id);
        if (!(d >= 0.0 && d < 1.0))
            throw ValidationError("damage of bar " + std::to_string(id) + " must lie in [0, 1)");
        out.bar_modulus[static_cast<std::size_t>(id - 1)] = model.material.young_modulus * (1.0 - d);
    }
    return out;
}

// Model file format -----------------------------------------------------------

inline nlohmann::json model_to_json(const TrussModel& m)
{
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : m.nodes)
        j["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
    j["bars"] = nlohmann::json::array();
    for (const auto& b : m.bars)
        j["bars"].push_back({{"id", b.id}, {"i", b.node_i}, {"j", b.node_j}});
    j["material"] = {{"E", m.material.young_modulus},
                     {"nu", m.material.poisson_ratio},
                     {"rho", m.material.density},
                     {"A", m.material.cross_area}};
    j["supports"] = nlohmann::json::array();
    for (const auto& s : m.supports)
        j["supports"].push_back({{"node", s.node}, {"fix_x", s.fix_x}, {"fix_y", s.fix_y}});
    return j;
}

/// Nodes and bars may appear in any order in the file; they are sorted by id.
inline TrussModel model_from_json(const nlohmann::json& j)
{
    TrussModel m;
    try {
        for (const auto& n : j.at("nodes"))
            m.nodes.push_back({n.at("id").get<int>(), n.at("x").get<double>(), n.at("y").get<double>()});
        for (const auto& b : j.at("bars"))
            m.bars.push_back({b.at("id").get<int>(), b.at("i").get<int>(), b.at("j").get<int>()});
        const auto& mat = j.at("material");
        m.material = {mat.at("E").get<double>(), mat.at("nu").get<double>(), mat.at("rho").get<double>(),
                      mat.at("A").get<double>()};
        for (const auto& s : j.at("supports"))
            m.supports.push_back({s.at("node").get<int>(), s.value("fix_x", false), s.value("fix_y", false)});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
    std::sort(m.nodes.begin(), m.nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
    std::sort(m.bars.begin(), m.bars.end(), [](const Bar& a, const Bar& b) { return a.id < b.id; });
    validate(m);
    return m;
}

/// Parse JSON text, mapping parser failures to ParseError with byte offset.
inline nlohmann::json parse_json_text(std::string_view text, const std::string& what)
{
    try {
        return nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(what + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what(), e.byte);
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// "builtin" selects benchmark_truss(); anything else is a model file path.
inline TrussModel load_model(const std::string& source)
{
    if (source == "builtin")
        return benchmark_truss();
    return model_from_json(parse_json_text(read_file(source), source));
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Hash of the canonical (sorted-key, compact) serialization of the
/// pristine model. Insensitive to whitespace and ordering in the source file.
inline std::string model_fingerprint(const TrussModel& model)
{
    return fnv1a_hex(model_to_json(model).dump());
}

} // namespace trussfa
