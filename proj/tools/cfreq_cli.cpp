// cfreq: command-line front end.
//
//   cfreq run <case...> [--tend T] [--dt H] [--seed S] [--noise-sigma SIG]
//             [--record 2,8] [--event SPEC]... [--jobs N] [--emit-plots]
//   cfreq estimate <case> <csv> --bus K [--window W] [--from T] [--to T]
//   cfreq abc <csv> --bus K
//
// Outputs go to $CFREQ_OUTPUT_DIR (default ./cfreq_out).
// Exit codes: 0 ok, 1 input error, 2 initialization error, 3 runtime error.

#include "cfreq/casefile.hpp"
#include "cfreq/errors.hpp"
#include "cfreq/estimators.hpp"
#include "cfreq/park.hpp"
#include "cfreq/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInput = 1, kInit = 2, kRuntime = 3 };

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const cfreq::InputError*>(&e) != nullptr ||
        dynamic_cast<const cfreq::ModelError*>(&e) != nullptr) {
        return kInput;
    }
    if (dynamic_cast<const cfreq::InitError*>(&e) != nullptr ||
        dynamic_cast<const cfreq::ParameterError*>(&e) != nullptr) {
        return kInit;
    }
    return kRuntime;
}

fs::path output_dir()
{
    const char* env = std::getenv("CFREQ_OUTPUT_DIR");
    fs::path dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("cfreq_out");
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw cfreq::InputError("cannot write '" + p.string() + "'");
    }
    out << text;
}

struct RunFlags {
    std::optional<double> t_end;
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise_sigma;
    std::vector<int> record;
    std::vector<std::string> events;
    bool emit_plots = false;
};

int run_one(const std::string& case_path, const std::string& stem, const RunFlags& f,
            std::ostream& log)
{
    try {
        const cfreq::CaseFile c = cfreq::load_case(case_path);
        cfreq::RunOptions opts = cfreq::default_options(c);
        if (f.t_end) {
            opts.t_end = *f.t_end;
        }
        if (f.dt) {
            opts.dt = *f.dt;
        }
        if (f.seed) {
            opts.seed = *f.seed;
        }
        if (f.noise_sigma) {
            opts.noise_sigma = *f.noise_sigma;
        }
        if (!f.record.empty()) {
            opts.record = f.record;
        }
        if (!f.events.empty()) {
            opts.events.clear();
            for (const auto& spec : f.events) {
                opts.events.push_back(cfreq::parse_event_spec(spec));
            }
        }
        const cfreq::RunResult r = cfreq::run_scenario(c, opts);
        const auto record = cfreq::resolve_record(opts, c.model.n_bus());
        const fs::path dir = output_dir();
        const std::string csv_name = stem + ".csv";
        write_file(dir / csv_name, cfreq::format_csv(r, record));
        write_file(dir / (stem + ".summary.json"), cfreq::format_summary(r, opts));
        if (f.emit_plots) {
            write_file(dir / (stem + "_plots.py"), cfreq::format_plot_script(csv_name, record));
        }
        log << fmt::format("{}: {} steps, max sdot residual {:.3e}, max |eta| {:.3e} -> {}\n",
                           stem, r.stats.steps, r.stats.max_sdot_residual, r.stats.max_eta,
                           (dir / csv_name).string());
        return kOk;
    } catch (const std::exception& e) {
        log << fmt::format("{}: error: {}\n", case_path, e.what());
        return exit_code_for(e);
    }
}

int cmd_run(const std::vector<std::string>& cases, const RunFlags& f, int jobs)
{
    // unique output stems per case
    std::vector<std::string> stems;
    std::map<std::string, int> seen;
    for (const auto& c : cases) {
        std::string s = fs::path(c).stem().string();
        const int k = seen[s]++;
        stems.push_back(k == 0 ? s : fmt::format("{}_{}", s, k));
    }
    std::vector<int> codes(cases.size(), kOk);
    std::vector<std::string> logs(cases.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cases.size(); i = next++) {
            std::ostringstream os;
            codes[i] = run_one(cases[i], stems[i], f, os);
            logs[i] = os.str();
        }
    };
    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(cases.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    int code = kOk;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        (codes[i] == kOk ? std::cout : std::cerr) << logs[i];
        code = std::max(code, codes[i]);
    }
    return code;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;

    const std::vector<double>& col(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return cols[i];
            }
        }
        throw cfreq::InputError("CSV has no column '" + name + "'");
    }
};

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw cfreq::InputError("cannot open '" + path + "'");
    }
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) {
        throw cfreq::InputError("'" + path + "' is empty");
    }
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) {
        t.header.push_back(cell);
    }
    t.cols.resize(t.header.size());
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::size_t i = 0;
        for (std::string cell; std::getline(ls, cell, ','); ++i) {
            if (i >= t.cols.size()) {
                throw cfreq::InputError("'" + path + "': row wider than the header");
            }
            t.cols[i].push_back(std::stod(cell));
        }
    }
    return t;
}

int cmd_estimate(const std::string& case_path, const std::string& csv_path, int bus,
                 double window, double t_from, double t_to)
{
    try {
        const cfreq::CaseFile c = cfreq::load_case(case_path);
        const std::size_t n = c.model.n_bus();
        if (bus < 1 || bus > static_cast<int>(n)) {
            throw cfreq::InputError("--bus " + std::to_string(bus) + " does not exist");
        }
        const CsvTable t = read_csv(csv_path);
        std::vector<std::vector<double>> v(n), theta(n);
        for (std::size_t h = 0; h < n; ++h) {
            v[h] = t.col(fmt::format("bus{}.v", h + 1));
            theta[h] = t.col(fmt::format("bus{}.theta", h + 1));
        }
        std::vector<bool> ev;
        for (double e : t.col("event")) {
            ev.push_back(e != 0.0);
        }
        const auto w = cfreq::make_window(t.col("time"), v, theta, ev);
        const auto y = cfreq::build_admittance(c.model.grid);
        cfreq::VdlEstimatorOptions o;
        o.window = window;
        o.t_from = t_from;
        o.t_to = t_to;
        fmt::memory_buffer out;
        fmt::format_to(std::back_inserter(out), "window_start,gamma_p,gamma_q,method\n");
        for (auto [method, label] : {std::pair{cfreq::VdlMethod::exact, "exact"},
                                     std::pair{cfreq::VdlMethod::approximate, "approximate"}}) {
            const auto series = cfreq::estimate_vdl_exponents(w, y, static_cast<std::size_t>(bus - 1),
                                                              method, o);
            for (const auto& e : series.windows) {
                fmt::format_to(std::back_inserter(out), "{:.17g},{:.17g},{:.17g},{}\n", e.t_start,
                               e.gamma_p, e.gamma_q, label);
            }
            std::cout << fmt::format("{}: median gamma_p {:.4f}, gamma_q {:.4f} ({} windows, {} skipped)\n",
                                     label, series.median_gamma_p, series.median_gamma_q,
                                     series.windows.size(), series.skipped);
        }
        const fs::path dst = output_dir() / (fs::path(csv_path).stem().string() + ".estimates.csv");
        write_file(dst, fmt::to_string(out));
        std::cout << "wrote " << dst.string() << "\n";
        return kOk;
    } catch (const cfreq::EstimationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_abc(const std::string& csv_path, int bus, double f_o)
{
    try {
        const CsvTable t = read_csv(csv_path);
        const auto& time = t.col("time");
        const auto& v = t.col(fmt::format("bus{}.v", bus));
        const auto& theta = t.col(fmt::format("bus{}.theta", bus));
        std::vector<double> u(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            u[i] = std::log(v[i]);
        }
        const auto abc = cfreq::abc_synthesize(time, u, theta, f_o);
        fmt::memory_buffer out;
        fmt::format_to(std::back_inserter(out), "time,a,b,c\n");
        for (std::size_t i = 0; i < time.size(); ++i) {
            fmt::format_to(std::back_inserter(out), "{:.17g},{:.17g},{:.17g},{:.17g}\n", time[i],
                           abc.a[i], abc.b[i], abc.c[i]);
        }
        const fs::path dst =
            output_dir() / fmt::format("{}.bus{}.abc.csv", fs::path(csv_path).stem().string(), bus);
        write_file(dst, fmt::to_string(out));
        std::cout << "wrote " << dst.string() << "\n";
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Complex-frequency power-system simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "simulate one or more case files");
    std::vector<std::string> cases;
    RunFlags flags;
    double t_end = 0.0, dt = 0.0, sigma = 0.0;
    std::uint64_t seed = 0;
    std::string record;
    int jobs = 1;
    run->add_option("cases", cases, "case files")->required()->check(CLI::ExistingFile);
    auto* o_tend = run->add_option("--tend", t_end, "simulation end time (s)")->check(CLI::PositiveNumber);
    auto* o_dt = run->add_option("--dt", dt, "fixed time step (s)")->check(CLI::PositiveNumber);
    auto* o_seed = run->add_option("--seed", seed, "noise seed");
    auto* o_sigma = run->add_option("--noise-sigma", sigma, "measurement noise std (pu)")
                        ->check(CLI::NonNegativeNumber);
    run->add_option("--record", record, "comma-separated bus indices to record");
    run->add_option("--event", flags.events,
                    "event spec, repeatable (replaces the case scenario events)");
    run->add_option("--jobs", jobs, "parallel scenarios")->check(CLI::PositiveNumber);
    run->add_flag("--emit-plots", flags.emit_plots, "write matplotlib scripts next to the CSVs");

    auto* est = app.add_subcommand("estimate", "VDL exponent estimation from a trajectory CSV");
    std::string est_case, est_csv;
    int est_bus = 0;
    double est_window = 0.1, est_from = -1e300, est_to = 1e300;
    est->add_option("case", est_case, "case file")->required()->check(CLI::ExistingFile);
    est->add_option("csv", est_csv, "trajectory CSV with every bus recorded")->required()->check(CLI::ExistingFile);
    est->add_option("--bus", est_bus, "VDL bus (1-based)")->required();
    est->add_option("--window", est_window, "window length (s)")->check(CLI::PositiveNumber);
    est->add_option("--from", est_from, "earliest window start (s)");
    est->add_option("--to", est_to, "latest window end (s)");

    auto* abc = app.add_subcommand("abc", "synthesize balanced abc waveforms for one bus");
    std::string abc_csv;
    int abc_bus = 0;
    double abc_f = 60.0;
    abc->add_option("csv", abc_csv, "trajectory CSV")->required()->check(CLI::ExistingFile);
    abc->add_option("--bus", abc_bus, "bus (1-based)")->required();
    abc->add_option("--f-nominal", abc_f, "nominal frequency (Hz)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInput;
    }

    if (*run) {
        if (*o_tend) {
            flags.t_end = t_end;
        }
        if (*o_dt) {
            flags.dt = dt;
        }
        if (*o_seed) {
            flags.seed = seed;
        }
        if (*o_sigma) {
            flags.noise_sigma = sigma;
        }
        if (!record.empty()) {
            std::stringstream ss(record);
            for (std::string tok; std::getline(ss, tok, ',');) {
                try {
                    flags.record.push_back(std::stoi(tok));
                } catch (const std::exception&) {
                    std::cerr << "error: --record: '" << tok << "' is not a bus index\n";
                    return kInput;
                }
            }
        }
        for (const auto& spec : flags.events) {
            try {
                (void)cfreq::parse_event_spec(spec);
            } catch (const cfreq::InputError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kInput;
            }
        }
        return cmd_run(cases, flags, jobs);
    }
    if (*est) {
        return cmd_estimate(est_case, est_csv, est_bus, est_window, est_from, est_to);
    }
    return cmd_abc(abc_csv, abc_bus, abc_f);
}
