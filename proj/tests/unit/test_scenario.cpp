#include <doctest.h>

#include <fstream>
#include <sstream>

#include "hybridkvh/scenario.hpp"

using namespace hkvh;

namespace {

const char* kMinimal = R"(
[grid]
nq = 16
np = 16
Lp = 8.0

[model]

[run]
dt = 0.001
steps = 10
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        return e.what();
    }
    return "";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
    const ScenarioConfig c = parse_config(kMinimal);
    CHECK(c.grid.mode == "finite_dim");
    CHECK(c.grid.n_levels == 2);
    CHECK(c.grid.Lq == doctest::Approx(2.0 * M_PI));
    CHECK(c.model.hbar == 1.0);
    CHECK(c.model.lambda == 0.0);
    CHECK(c.model.potential == "pendulum_bilinear");
    CHECK(c.initial.name == "gaussian_product");
    CHECK(c.run.kind == "wave");
    CHECK(c.run.node_threshold == 1e-10);
    CHECK(c.run.boundary_mass_threshold == 1e-6);
    CHECK(c.output.formats == std::vector<std::string>{"csv"});
    CHECK(c.phase_grid().nx == 2);
}

TEST_CASE("errors carry key and line") {
    const std::string neg = error_of(replace(kMinimal, "nq = 16", "nq = -4"));
    CHECK(neg.find("line 3") != std::string::npos);
    CHECK(neg.find("grid.nq") != std::string::npos);

    CHECK(error_of(replace(kMinimal, "Lp = 8.0", "Lp = 8.0\nnz = 3")).find("line 6: unknown key 'nz'") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "dt = 0.001", "dt = fast")).find("line 10: run.dt: expected a number") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "steps = 10", "steps = 1.5")).find("expected an integer") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "[model]", "[model]\nquantum_kinetic = yes")).find("true or false") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "[model]", "[model]\npotential = morse")).find("unknown potential 'morse'") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "[model]", "[model]\n[initial]\nname = squeezed"))
              .find("unknown initial state 'squeezed'") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "steps = 10", "")).find("missing required key 'run.steps'") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "[model]\n", "")).find("missing required section [model]") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "[model]", "[model]\n[extras]")).find("unknown section [extras]") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "nq = 16", "nq = 16\nnq = 8")).find("duplicate key") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "nq = 16", "mode = continuum\nnq = 16")).find("grid.nx") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "steps = 10", "steps = 10\ndiagnostics = madelung"))
              .find("needs a continuum wave run") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "steps = 10", "steps = 10\nkind = closure\nclosure_variant = full"))
              .find("run.closure_variant") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "[run]", "[output]\nformats = csv,hdf5\n[run]")).find("unknown format 'hdf5'") !=
          std::string::npos);
    CHECK(error_of("nq = 3").find("line 1: key outside") != std::string::npos);
}

TEST_CASE("comments, quoting, options") {
    const std::string text = replace(kMinimal, "[model]",
                                     "[model]  # coupled\nlambda = 0.25 # strength\npotential = \"analytic_alpha\"\n"
                                     "alpha_z = 0.5\n\n[output]\ndirectory = \"runs/#1\"");
    const ScenarioConfig c = parse_config(text);
    CHECK(c.model.lambda == 0.25);
    CHECK(c.model.potential == "analytic_alpha");
    CHECK(c.model.options.at("alpha_z") == 0.5);
    CHECK(c.model.options.count("alpha_x") == 0);
    CHECK(c.output.directory == "runs/#1");
}

TEST_CASE("serialisation round trip") {
    ScenarioConfig c = parse_config(kMinimal);
    c.model.lambda = 0.1 + 0.2;  // not exactly representable as written
    c.model.options["delta"] = 1.0 / 3.0;
    c.run.diagnostics = {};
    c.output.formats = {"csv", "snapshot"};
    const ScenarioConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(serialize_config(back) == serialize_config(c));
}

TEST_CASE("built-in scenarios round trip and match the shipped files") {
    REQUIRE(builtin_scenarios().size() == 6);
    for (const auto& s : builtin_scenarios()) {
        CAPTURE(s.name);
        const ScenarioConfig c = parse_config(s.text);
        CHECK(serialize_config(c) == s.text);
        CHECK(read_file(std::string(HKVH_SCENARIO_DIR) + "/" + s.name + ".ini") == s.text);
        CHECK(load_config(std::string(HKVH_SCENARIO_DIR) + "/" + s.name + ".ini") == c);
    }
    const ScenarioConfig canonical = parse_config(builtin_scenario("canonical_wave").text);
    CHECK(canonical.grid.nq == 64);
    CHECK(canonical.grid.np == 64);
    CHECK(canonical.grid.n_levels == 2);
    CHECK(canonical.model.lambda == 0.1);
    CHECK(canonical.run.dt == 1e-3);
    CHECK(canonical.run.steps == 2000);
    CHECK_THROWS_AS(builtin_scenario("nope"), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), Error);
}

TEST_CASE("quantum_kinetic reaches the Hamiltonian") {
    std::string text = replace(kMinimal, "nq = 16", "mode = continuum\nnq = 16\nnx = 8");
    CHECK(parse_config(text).hamiltonian().separable().quantum_kinetic);
    text = replace(text, "[model]", "[model]\nquantum_kinetic = false");
    CHECK_FALSE(parse_config(text).hamiltonian().separable().quantum_kinetic);
    CHECK(error_of(replace(kMinimal, "[model]", "[model]\nquantum_kinetic = false")).find("continuum") !=
          std::string::npos);
}
