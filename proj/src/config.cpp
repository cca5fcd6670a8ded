#include "deblur/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace deblur {

std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::kernel_size_level: return "kernel_size_level";
    case SweepAxis::noise: return "noise";
    }
    return "lambda";
}

SweepAxis sweep_axis_from_string(const std::string& s)
{
    if (s == "lambda")
        return SweepAxis::lambda;
    if (s == "kernel_size_level")
        return SweepAxis::kernel_size_level;
    if (s == "noise")
        return SweepAxis::noise;
    throw ParameterError("unknown sweep axis '" + s + "'");
}

nlohmann::json to_json(const ObjectiveConfig& c)
{
    return {{"huber_delta", c.huber_delta}, {"lambda_x", c.lambda_x}, {"denom_epsilon", c.denom_epsilon}};
}

ObjectiveConfig objective_from_json(const nlohmann::json& j)
{
    ObjectiveConfig c;
    c.huber_delta = j.value("huber_delta", c.huber_delta);
    c.lambda_x = j.value("lambda_x", c.lambda_x);
    c.denom_epsilon = j.value("denom_epsilon", c.denom_epsilon);
    return c;
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

nlohmann::json size_json(PixelSize s)
{
    return nlohmann::json::array({s.rows, s.cols});
}

PixelSize size_from_json(const nlohmann::json& j)
{
    if (j.is_number_integer())
        return {j.get<int>(), j.get<int>()};
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("sizes are an integer or a [rows, cols] pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

std::string path_str(const std::filesystem::path& p)
{
    return p.generic_string();
}

nlohmann::json synth_json(const SynthSettings& s)
{
    return {{"case_id", s.case_id},
            {"clean", s.clean},
            {"image_size", size_json(s.image_size)},
            {"kernel", s.kernel},
            {"kernel_size", s.kernel_size},
            {"gaussian_kernel_sigma", s.gaussian_kernel_sigma},
            {"channels", s.channels}};
}

SynthSettings synth_from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"case_id", "clean", "image_size", "kernel", "kernel_size", "gaussian_kernel_sigma", "channels"},
                   "synth");
    SynthSettings s;
    s.case_id = j.value("case_id", s.case_id);
    s.clean = j.value("clean", s.clean);
    if (j.contains("image_size"))
        s.image_size = size_from_json(j["image_size"]);
    s.kernel = j.value("kernel", s.kernel);
    s.kernel_size = j.value("kernel_size", s.kernel_size);
    s.gaussian_kernel_sigma = j.value("gaussian_kernel_sigma", s.gaussian_kernel_sigma);
    s.channels = j.value("channels", s.channels);
    if (s.image_size.rows < 8 || s.image_size.cols < 8)
        throw ConfigError("synth.image_size must be at least 8 x 8");
    if (s.kernel_size < 1 || s.kernel_size % 2 == 0)
        throw ConfigError("synth.kernel_size must be a positive odd number");
    if (s.channels != 1 && s.channels != 3)
        throw ConfigError("synth.channels must be 1 or 3");
    if (s.case_id.empty() || s.case_id.find_first_of("/\\") != std::string::npos)
        throw ConfigError("synth.case_id must be a plain name");
    return s;
}

nlohmann::json sweep_json(const SweepSettings& s)
{
    nlohmann::json noises = nlohmann::json::array();
    for (const auto& n : s.noises)
        noises.push_back(n.to_json());
    return {{"axis", to_string(s.axis)},
            {"lambdas", s.lambdas},
            {"levels", s.levels},
            {"noises", noises},
            {"seeds", s.seeds}};
}

std::vector<NoiseSpec> default_noise_axis()
{
    return {NoiseSpec::preset(NoiseKind::gaussian, "fig_low"),  NoiseSpec::preset(NoiseKind::gaussian, "fig_high"),
            NoiseSpec::preset(NoiseKind::impulse, "fig_low"),   NoiseSpec::preset(NoiseKind::impulse, "fig_high"),
            NoiseSpec::preset(NoiseKind::shot, "fig_low"),      NoiseSpec::preset(NoiseKind::shot, "fig_high")};
}

SweepSettings sweep_from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"axis", "lambdas", "levels", "noises", "seeds"}, "sweep");
    SweepSettings s;
    s.axis = sweep_axis_from_string(j.value("axis", to_string(s.axis)));
    s.lambdas = j.value("lambdas", s.lambdas);
    s.levels = j.value("levels", s.levels);
    if (j.contains("noises"))
        for (const auto& n : j["noises"])
            s.noises.push_back(NoiseSpec::from_json(n));
    else
        s.noises = default_noise_axis();
    s.seeds = j.value("seeds", s.seeds);
    if (s.lambdas.empty() || s.seeds.empty())
        throw ConfigError("sweep.lambdas and sweep.seeds must not be empty");
    for (double l : s.lambdas)
        if (!(l >= 0))
            throw ConfigError("sweep.lambdas must be nonnegative");
    if (s.levels < 1)
        throw ConfigError("sweep.levels must be at least 1");
    return s;
}

nlohmann::json paths_json(const PathSettings& p)
{
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : p.cases)
        cases.push_back(path_str(c));
    return {{"input", path_str(p.input)},
            {"case_dir", path_str(p.case_dir)},
            {"groundtruth_image", path_str(p.groundtruth_image)},
            {"groundtruth_kernel", path_str(p.groundtruth_kernel)},
            {"cases", cases},
            {"estimates", path_str(p.estimates)},
            {"groundtruth_dir", path_str(p.groundtruth_dir)},
            {"out", path_str(p.out)}};
}

PathSettings paths_from_json(const nlohmann::json& j, const std::filesystem::path& base)
{
    reject_unknown(j,
                   {"input", "case_dir", "groundtruth_image", "groundtruth_kernel", "cases", "estimates",
                    "groundtruth_dir", "out"},
                   "paths");
    // relative paths resolve against the config file's directory
    auto resolve = [&](const std::string& s) -> std::filesystem::path {
        if (s.empty())
            return {};
        std::filesystem::path p(s);
        return p.is_absolute() || base.empty() ? p : base / p;
    };
    PathSettings p;
    p.input = resolve(j.value("input", std::string()));
    p.case_dir = resolve(j.value("case_dir", std::string()));
    p.groundtruth_image = resolve(j.value("groundtruth_image", std::string()));
    p.groundtruth_kernel = resolve(j.value("groundtruth_kernel", std::string()));
    for (const auto& c : j.value("cases", std::vector<std::string>{}))
        p.cases.push_back(resolve(c));
    p.estimates = resolve(j.value("estimates", std::string()));
    p.groundtruth_dir = resolve(j.value("groundtruth_dir", std::string()));
    p.out = j.contains("out") ? resolve(j["out"].get<std::string>()) : std::filesystem::path("out");
    return p;
}

RunConfig parse(const nlohmann::json& j, const std::filesystem::path& base)
{
    reject_unknown(j,
                   {"schema_version", "seed", "kernel_size", "objective", "ablation", "solver", "es_profile",
                    "image_generator", "kernel_field", "noise", "synth", "sweep", "paths", "save_checkpoint"},
                   "config");
    const int version = j.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(version));

    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("kernel_size") && !j["kernel_size"].is_null())
        c.kernel_size = size_from_json(j["kernel_size"]);

    if (j.contains("objective")) {
        reject_unknown(j["objective"], {"huber_delta", "lambda_x", "denom_epsilon"}, "objective");
        c.objective = objective_from_json(j["objective"]);
    }
    nlohmann::json kernel_json = j.value("kernel_field", nlohmann::json::object());
    reject_unknown(kernel_json, {"hidden_width", "hidden_layers", "omega", "mlp_input", "mlp_hidden"}, "kernel_field");
    if (j.contains("ablation")) {
        const auto& a = j["ablation"];
        reject_unknown(a, {"loss_kind", "reg_kind", "kernel_model", "kernel_normalize"}, "ablation");
        c.objective.loss_kind = loss_kind_from_string(a.value("loss_kind", to_string(c.objective.loss_kind)));
        c.objective.reg_kind = reg_kind_from_string(a.value("reg_kind", to_string(c.objective.reg_kind)));
        kernel_json["model"] = a.value("kernel_model", std::string("siren"));
        kernel_json["normalize"] = a.value("kernel_normalize", std::string("sum"));
    }
    c.objective.validate();
    c.kernel_arch = KernelFieldArch::from_json(kernel_json);

    c.es_profile = es_profile_from_string(j.value("es_profile", to_string(c.es_profile)));
    nlohmann::json solver_json = c.solver.to_json();
    if (j.contains("solver")) {
        reject_unknown(j["solver"], std::set<std::string>(
                                        [&] {
                                            std::set<std::string> keys;
                                            for (const auto& [k, _] : solver_json.items())
                                                keys.insert(k);
                                            return keys;
                                        }()),
                       "solver");
        solver_json.update(j["solver"]);
    }
    if (!j.contains("solver") || !j["solver"].contains("patience"))
        solver_json["patience"] = SolverConfig::patience_for(c.es_profile);
    if (!j.contains("solver") || !j["solver"].contains("seed"))
        solver_json["seed"] = c.seed;
    c.solver = SolverConfig::from_json(solver_json);

    if (j.contains("image_generator"))
        c.image_arch = GeneratorArch::from_json(j["image_generator"]);
    if (j.contains("noise")) {
        nlohmann::json n = j["noise"];
        if (!n.contains("seed"))
            n["seed"] = c.seed;
        c.noise = NoiseSpec::from_json(n);
    } else {
        c.noise.seed = c.seed;
    }
    if (j.contains("synth"))
        c.synth = synth_from_json(j["synth"]);
    c.sweep = sweep_from_json(j.value("sweep", nlohmann::json::object()));
    if (j.contains("paths"))
        c.paths = paths_from_json(j["paths"], base);
    c.save_checkpoint = j.value("save_checkpoint", c.save_checkpoint);
    return c;
}

} // namespace

nlohmann::json RunConfig::to_json() const
{
    nlohmann::json kernel = kernel_arch.to_json();
    kernel.erase("model");
    kernel.erase("normalize");
    return {{"schema_version", kConfigSchemaVersion},
            {"seed", seed},
            {"kernel_size", kernel_size ? size_json(*kernel_size) : nlohmann::json(nullptr)},
            {"objective", deblur::to_json(objective)},
            {"ablation",
             {{"loss_kind", deblur::to_string(objective.loss_kind)},
              {"reg_kind", deblur::to_string(objective.reg_kind)},
              {"kernel_model", deblur::to_string(kernel_arch.model)},
              {"kernel_normalize", deblur::to_string(kernel_arch.normalize)}}},
            {"solver", solver.to_json()},
            {"es_profile", deblur::to_string(es_profile)},
            {"image_generator", image_arch.to_json()},
            {"kernel_field", kernel},
            {"noise", noise.to_json()},
            {"synth", synth_json(synth)},
            {"sweep", sweep_json(sweep)},
            {"paths", paths_json(paths)},
            {"save_checkpoint", save_checkpoint}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j)
{
    try {
        return parse(j, {});
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        return parse(j, path.parent_path());
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void RunConfig::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
    if (!out)
        throw IoError("write failed for " + path.string());
}

void RunConfig::apply_seed(std::uint64_t s)
{
    seed = s;
    solver.seed = s;
    noise.seed = s;
}

void RunConfig::apply_es_profile(EsProfile p)
{
    es_profile = p;
    solver.patience = SolverConfig::patience_for(p);
}

std::string RunConfig::method_hash() const
{
    const nlohmann::json j = to_json();
    nlohmann::json method{{"objective", j["objective"]},
                          {"ablation", j["ablation"]},
                          {"solver", j["solver"]},
                          {"image_generator", j["image_generator"]},
                          {"kernel_field", j["kernel_field"]},
                          {"kernel_size", j["kernel_size"]}};
    method["solver"].erase("seed");
    // 64-bit FNV-1a of the compact dump
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : method.dump()) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool RunConfig::operator==(const RunConfig& other) const
{
    return to_json() == other.to_json();
}

} // namespace deblur
