#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace swlim;
namespace fs = std::filesystem;

namespace {

const std::string samples = SWLIM_SAMPLES_DIR;
const std::string cli = SWLIM_CLI_PATH;

std::string format_message(const json& j)
{
    try {
        system_from_json(j);
    } catch (const format_error& e) {
        return e.what();
    }
    return "";
}

fs::path scratch()
{
    const fs::path dir = fs::temp_directory_path() / ("swlim_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run(const std::string& args)
{
    const fs::path out = scratch() / "stdout.txt";
    const std::string cmd = cli + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    return r;
}

} // namespace

TEST(SystemFile, ParsesTheWorkedExample)
{
    const SwitchedSystem s = system_from_json(read_json_file(samples + "/worked_example_system.json"));
    EXPECT_EQ(s.dim(), 3);
    EXPECT_EQ(s.size(), 3u);
    EXPECT_EQ(s.labels().at(0), "rotation");
    EXPECT_DOUBLE_EQ(s.matrix(0)(2, 1), 1.0);
}

TEST(SystemFile, DiagnosticsNameTheOffendingField)
{
    EXPECT_NE(format_message(json::parse(R"({"matrices": [[[0]]]})")).find("dimension"), std::string::npos);
    EXPECT_NE(format_message(json::parse(R"({"dimension": 2})")).find("matrices"), std::string::npos);
    EXPECT_NE(format_message(json::parse(R"({"dimension": 2, "matrices": [[[0, 0], [0]]]})")).find("matrices[0][1]"),
              std::string::npos);
    EXPECT_NE(format_message(json::parse(R"({"dimension": 1, "matrices": [[["x"]]]})")).find("matrices[0][0][0]"),
              std::string::npos);
    EXPECT_NE(format_message(json::parse(R"({"dimension": 1, "matrices": [[[0]]], "lyapunov": [[1, 2]]})"))
                  .find("lyapunov"),
              std::string::npos);
    EXPECT_NE(format_message(json::parse(R"({"dimension": 1, "matrices": [[[0]]], "labels": ["a", "b"]})"))
                  .find("labels"),
              std::string::npos);
}

TEST(SystemFile, RoundTripsThroughJson)
{
    std::mt19937_64 rng(61);
    const SwitchedSystem s({oracle::random_matrix(rng, 3, 3), oracle::random_matrix(rng, 3, 3)},
                           Matrix(Matrix::Identity(3, 3)), {"a", "b"});
    const SwitchedSystem back = system_from_json(json::parse(dump_json(system_to_json(s))));
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_EQ(back.matrix(i), s.matrix(i)); // 17 digits round-trip exactly
    EXPECT_EQ(back.labels(), s.labels());
    EXPECT_TRUE(back.has_lyapunov());
}

TEST(SignalFile, AllFourTypes)
{
    const auto periodic = signal_from_json(read_json_file(samples + "/worked_example_signal.json"), 3);
    EXPECT_EQ(periodic.value_at(M_PI / 2 + 0.1), 1u);
    const auto chaotic = signal_from_json(read_json_file(samples + "/chaotic_signal.json"), 2);
    EXPECT_EQ(std::get<ChaoticGenerator>(chaotic.generator()).seed, 7u);
    const auto dwell = signal_from_json(json::parse(R"({"type": "average_dwell", "n0": 2, "tau_a": 0.5})"), 2, 99);
    EXPECT_EQ(std::get<AverageDwellGenerator>(dwell.generator()).seed, 99u);
    const auto expl = signal_from_json(read_json_file(samples + "/explicit_prefix_signal.json"), 2);
    EXPECT_DOUBLE_EQ(expl.horizon(), 8.0);
}

TEST(SignalFile, MalformedInputsAreFormatErrors)
{
    EXPECT_THROW(signal_from_json(json::parse(R"({"type": "sinusoid"})"), 2), format_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"type": "explicit", "times": [0]})"), 2), format_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"type": "explicit", "times": [0], "values": [5]})"), 2),
                 format_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"type": "periodic", "pattern": [{"index": 0}]})"), 2),
                 format_error);
    EXPECT_THROW(signal_from_json(json::parse(R"({"type": "chaotic", "tau": 1, "seed": -1})"), 2), format_error);
}

TEST(JsonDump, SeventeenSignificantDigitsAndNullForNonFinite)
{
    const json j = {{"x", 0.1}, {"inf", std::numeric_limits<double>::infinity()}, {"n", 3}};
    const std::string text = dump_json(j);
    EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
    EXPECT_NE(text.find("\"inf\": null"), std::string::npos);
    EXPECT_NE(text.find("\"n\": 3"), std::string::npos);
}

TEST(AtomicWrite, ReplacesTheTargetAndLeavesNoTemporary)
{
    const fs::path p = scratch() / "atomic.txt";
    write_file_atomic(p.string(), "first");
    write_file_atomic(p.string(), "second");
    EXPECT_EQ(slurp(p), "second");
    EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST(ReportJson, KeyedByCheckName)
{
    const json j = to_json(assess(system_from_json(read_json_file(samples + "/worked_example_system.json"))));
    for (const char* key : {"lyapunov", "per_matrix", "condition_c", "theorem4", "theorem6", "theorem7", "conclusion"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["condition_c"]["component"], json({0, 1, 2}));
    EXPECT_EQ(j["per_matrix"][0]["V"]["dim"], 2);
}

TEST(Cli, AnalyzeExitCodes)
{
    const CliResult ok = run("analyze " + samples + "/worked_example_system.json");
    EXPECT_EQ(ok.code, 0);
    const json j = json::parse(ok.out);
    EXPECT_FALSE(j["condition_c"]["holds"].get<bool>());
    EXPECT_TRUE(j["theorem4"]["fired"].empty());

    const CliResult t7 = run("analyze " + samples + "/hurwitz_pair.json");
    EXPECT_EQ(t7.code, 0);
    EXPECT_EQ(json::parse(t7.out)["conclusion"]["certificate"], "theorem7");

    const fs::path bad = scratch() / "unstable.json";
    std::ofstream(bad) << R"({"dimension": 1, "matrices": [[[1]]]})";
    EXPECT_EQ(run("analyze " + bad.string()).code, 2);

    const fs::path broken = scratch() / "broken.json";
    std::ofstream(broken) << R"({"dimension": 2, "matrices": [[[1, 0]]]})";
    EXPECT_EQ(run("analyze " + broken.string()).code, 1);
    EXPECT_EQ(run("analyze " + samples + "/does_not_exist.json").code, 1);
}

TEST(Cli, SimulateWritesTheCsvAndChecksX0)
{
    const fs::path csv = scratch() / "traj.csv";
    const CliResult r = run("simulate " + samples + "/worked_example_system.json " + samples
                      + "/worked_example_signal.json --x0 1,1,1 --horizon 25.132741228718345 --samples 64 --out "
                      + csv.string());
    EXPECT_EQ(r.code, 0);
    const std::string text = slurp(csv);
    EXPECT_EQ(text.rfind("t,norm_x,gram_eig_1,gram_eig_2,gram_eig_3,active_index\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 66);
    // final Gram eigenvalues approach (0, 0, 1) within 1e-3
    std::istringstream summary(r.out);
    std::string word;
    double e1 = 0, e2 = 0, e3 = 0;
    while (summary >> word)
        if (word == "final_gram_eigenvalues")
            summary >> e1 >> e2 >> e3;
    EXPECT_LE(std::abs(e1), 1e-3);
    EXPECT_LE(std::abs(e2), 1e-3);
    EXPECT_NEAR(e3, 1.0, 1e-3);

    EXPECT_EQ(run("simulate " + samples + "/worked_example_system.json " + samples
                  + "/worked_example_signal.json --x0 1,1")
                  .code,
              1);
    const CliResult zero = run("simulate " + samples + "/worked_example_system.json " + samples
                         + "/worked_example_signal.json --x0 0,0,0 --horizon 0");
    EXPECT_EQ(zero.code, 0);
    EXPECT_EQ(std::count(zero.out.begin(), zero.out.end(), '\n'), 2);
}

TEST(Cli, EstimateSuAndCheckSignal)
{
    const CliResult su = run("estimate-su " + samples + "/worked_example_system.json " + samples
                       + "/worked_example_signal.json");
    EXPECT_EQ(su.code, 0);
    const json j = json::parse(su.out);
    EXPECT_EQ(j["rank"], 1);
    EXPECT_TRUE(j["converged"].get<bool>());

    const CliResult slow = run("estimate-su " + samples + "/worked_example_system.json " + samples
                         + "/worked_example_signal.json --horizon 4");
    EXPECT_EQ(slow.code, 3);

    const CliResult reg = run("check-signal " + samples + "/worked_example_signal.json --num-matrices 3");
    EXPECT_EQ(reg.code, 0);
    EXPECT_EQ(json::parse(reg.out)["regular_verdict"], "regular");
    const CliResult ch = run("check-signal " + samples + "/chaotic_signal.json --system " + samples
                       + "/hurwitz_pair.json");
    EXPECT_EQ(json::parse(ch.out)["chaotic_verdict"], "chaotic");
    const CliResult pre = run("check-signal " + samples + "/explicit_prefix_signal.json --num-matrices 2");
    EXPECT_EQ(json::parse(pre.out)["chaotic_verdict"], "undecidable-from-prefix");
    EXPECT_EQ(run("check-signal " + samples + "/chaotic_signal.json").code, 1);
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns)
{
    const std::string args = "report " + samples + "/hurwitz_pair.json " + samples + "/average_dwell_signal.json";
    const CliResult a = run(args), b = run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    const std::string sim = "simulate " + samples + "/hurwitz_pair.json " + samples
                            + "/chaotic_signal.json --x0 1,-2 --horizon 30";
    EXPECT_EQ(run(sim).out, run(sim).out);
}
