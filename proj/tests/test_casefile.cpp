#include "cfreq/casefile.hpp"
#include "cfreq/errors.hpp"
#include "cfreq/runner.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace cfreq;

namespace {

std::string read_text(const std::string& name)
{
    std::ifstream in(std::filesystem::path(CFREQ_CASES_DIR) / (name + ".case"));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const std::string& text)
{
    try {
        parse_case(text, "test");
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

void replace(std::string& s, const std::string& from, const std::string& to)
{
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("every shipped case parses and solves")
{
    for (const char* name : {"wscc9", "wscc9_fault", "wscc9_2nd", "wscc9_cig", "wscc9_2cig_1",
                             "wscc9_2cig_2", "wscc9_vdl", "wscc9_vdl_highrx"}) {
        INFO(name);
        CaseFile c = test::shipped_case(name);
        CHECK(c.name == name);
        CHECK(c.model.n_bus() == 9);
        CHECK_FALSE(c.scenario.events.empty());
        CHECK_NOTHROW(solve_power_flow(c.model));
    }
}

TEST_CASE("case documents are parsed into the model")
{
    const CaseFile c = parse_case(read_text("wscc9_fault"), "wscc9_fault");
    CHECK(c.model.grid.f_nominal() == 60.0);
    CHECK(c.model.machines.size() == 3);
    CHECK(c.model.loads.size() == 3);
    CHECK(c.model.machines[0].dispatch.slack);
    CHECK(c.model.loads[0].bus == 4);  // 0-based
    REQUIRE(c.scenario.events.size() == 3);
    CHECK(c.scenario.events[0].kind == EventKind::fault_apply);
    CHECK(c.scenario.events[0].bus == 7);
    CHECK(c.scenario.events[0].admittance == cplx(0.0, -1000.0));
    CHECK(c.scenario.dt == 1e-3);
}

TEST_CASE("schema violations name the offending location")
{
    std::string text = read_text("wscc9");
    replace(text, "\"H\":", "\"Hx\":");
    CHECK(error_of(text).find("machines[0].Hx: unknown key") != std::string::npos);

    text = read_text("wscc9");
    replace(text, "\"to\": 4", "\"to\": 14");
    CHECK_FALSE(error_of(text).empty());

    CHECK_FALSE(error_of("{ not json").empty());
    CHECK(error_of("{\"name\": \"x\"}").find("buses") != std::string::npos);

    text = read_text("wscc9");
    replace(text, "\"kind\": \"load_disconnect\"", "\"kind\": \"meteor\"");
    CHECK(error_of(text).find("meteor") != std::string::npos);
}

TEST_CASE("command-line event grammar")
{
    Event e = parse_event_spec("load5-trip@1.0");
    CHECK(e.kind == EventKind::load_disconnect);
    CHECK(e.bus == 5);
    CHECK(e.magnitude == 1.0);
    CHECK(e.time == 1.0);

    e = parse_event_spec("load5-trip:0.15@2.5");
    CHECK(e.magnitude == doctest::Approx(0.15));
    CHECK(e.time == 2.5);

    e = parse_event_spec("load5-connect:0.25@1");
    CHECK(e.kind == EventKind::load_connect);
    CHECK(e.power == cplx(0.25, 0.0));

    e = parse_event_spec("load5-connect:0.25:0.1@1");
    CHECK(e.power == cplx(0.25, 0.1));

    e = parse_event_spec("line5-7-trip@1.083");
    CHECK(e.kind == EventKind::line_trip);
    CHECK(e.bus == 5);
    CHECK(e.bus_to == 7);

    CHECK(parse_event_spec("line5-7-close@2").kind == EventKind::line_close);
    CHECK(parse_event_spec("fault7@1").kind == EventKind::fault_apply);
    CHECK(parse_event_spec("fault7-clear@1.1").kind == EventKind::fault_clear);

    for (const char* bad : {"load5@1", "load-trip@1", "line5-trip@1", "fault7", "fault7@x", "",
                            "load5-trip@-1"}) {
        INFO(bad);
        CHECK_THROWS_AS(parse_event_spec(bad), InputError);
    }
}

TEST_CASE("CSV output layout and plot script columns")
{
    auto c = test::shipped_case("wscc9");
    RunOptions o = default_options(c);
    o.t_end = 0.01;
    o.record = {2, 8};
    const RunResult r = run_scenario(c, o);
    const auto rec = resolve_record(o, 9);
    const std::string csv = format_csv(r, rec);
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header.rfind("time,event,coi.omega,bus2.v,", 0) == 0);
    CHECK(header.find("bus8.omega_fdf") != std::string::npos);
    CHECK(header.find("bus5.") == std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);  // header + 11 samples

    const std::string script = format_plot_script("wscc9.csv", rec);
    for (const auto& col : csv_columns(rec)) {
        (void)col;
    }
    // every column the script references must exist in the CSV header
    std::size_t pos = 0;
    while ((pos = script.find("\"bus", pos)) != std::string::npos) {
        const auto end = script.find('"', pos + 1);
        const std::string ref = script.substr(pos + 1, end - pos - 1);
        if (ref.find('.') != std::string::npos && ref.find('{') == std::string::npos) {
            CHECK(header.find(ref) != std::string::npos);
        }
        pos = end + 1;
    }
}
