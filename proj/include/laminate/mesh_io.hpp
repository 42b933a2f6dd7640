// mesh_io.hpp -- JSON round trip for meshes and fields.
//
// Integer fields round-trip exactly in decimal; reals rely on the serializer's
// shortest round-trip formatting, which reproduces the binary double (at most
// 17 significant digits).
#pragma once

#include "laminate/mesh.hpp"

#include <json.hpp>

namespace laminate {

using json = nlohmann::ordered_json;

inline json loop_to_json(const EdgeLoop& loop) {
    json steps = json::array();
    for (const auto& s : loop.steps) steps.push_back({s.vertex, s.shift[0], s.shift[1]});
    return json{{"start", loop.start}, {"steps", steps}};
}

inline EdgeLoop loop_from_json(const json& j) {
    EdgeLoop loop;
    loop.start = j.at("start").get<int>();
    for (const auto& s : j.at("steps"))
        loop.steps.push_back({s.at(0).get<int>(), Shift{s.at(1).get<int>(), s.at(2).get<int>()}});
    return loop;
}

inline json mesh_to_json(const SurfaceMesh& mesh) {
    json j;
    j["schema"] = 1;
    j["kind"] = mesh.kind == MeshKind::torus ? "torus" : mesh.kind == MeshKind::annulus ? "annulus" : "custom";
    json verts = json::array();
    for (const Vec2& v : mesh.vertices) verts.push_back({v.x, v.y});
    j["vertices"] = verts;
    json tris = json::array(), shifts = json::array(), metric = json::array();
    for (const Triangle& t : mesh.triangles) {
        tris.push_back({t.v[0], t.v[1], t.v[2]});
        shifts.push_back({{t.shift[0][0], t.shift[0][1]},
                          {t.shift[1][0], t.shift[1][1]},
                          {t.shift[2][0], t.shift[2][1]}});
        metric.push_back({t.metric.a, t.metric.b, t.metric.c});
    }
    j["triangles"] = tris;
    j["shifts"] = shifts;
    j["metric"] = metric;
    json deck = json::array();
    for (const Vec2& d : mesh.deck_translations) deck.push_back({d.x, d.y});
    j["deck_translations"] = deck;
    json glu = json::array();
    for (const Gluing& g : mesh.gluings)
        glu.push_back({{"edge", {g.edge[0], g.edge[1]}}, {"shift", {g.shift[0], g.shift[1]}}});
    j["gluings"] = glu;
    json basis = json::array();
    for (const EdgeLoop& loop : mesh.homology_basis) basis.push_back(loop_to_json(loop));
    j["homology_basis"] = basis;
    json boundary = json::array();
    for (const EdgeKey& e : mesh.boundary_edges) boundary.push_back({e.a, e.b, e.d[0], e.d[1]});
    j["boundary_edges"] = boundary;
    return j;
}

inline SurfaceMesh mesh_from_json(const json& j) {
    SurfaceMesh mesh;
    const std::string kind = j.at("kind").get<std::string>();
    mesh.kind = kind == "torus" ? MeshKind::torus : kind == "annulus" ? MeshKind::annulus : MeshKind::custom;
    for (const auto& v : j.at("vertices")) mesh.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    const auto& tris = j.at("triangles");
    const auto& shifts = j.at("shifts");
    const auto& metric = j.at("metric");
    for (std::size_t t = 0; t < tris.size(); ++t) {
        Triangle tri;
        for (int c = 0; c < 3; ++c) {
            tri.v[c] = tris.at(t).at(c).get<int>();
            tri.shift[c] = {shifts.at(t).at(c).at(0).get<int>(), shifts.at(t).at(c).at(1).get<int>()};
        }
        tri.metric = Sym2{metric.at(t).at(0).get<double>(), metric.at(t).at(1).get<double>(),
                          metric.at(t).at(2).get<double>()};
        mesh.triangles.push_back(tri);
    }
    for (const auto& d : j.at("deck_translations"))
        mesh.deck_translations.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
    for (const auto& loop : j.at("homology_basis")) mesh.homology_basis.push_back(loop_from_json(loop));
    mesh.finalize();
    return mesh;
}

inline json field_to_json(const EquivariantField& u) {
    return json{{"values", u.values}, {"rho", u.rho.periods}};
}

inline EquivariantField field_from_json(const json& j) {
    EquivariantField u;
    u.values = j.at("values").get<std::vector<double>>();
    u.rho.periods = j.at("rho").get<std::vector<double>>();
    return u;
}

} // namespace laminate
