#include "kucb/config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace kucb {

namespace {

std::string join_path(const std::string &prefix, const std::string &key) {
    return prefix.empty() ? key : prefix + "." + key;
}

// Reads one YAML mapping, remembering which keys were consumed so that
// everything else can be rejected as unknown.
class Section {
public:
    Section(YAML::Node node, std::string path, const std::set<std::string> &overridden)
        : node_(std::move(node)), path_(std::move(path)), overridden_(&overridden) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) { fail(node_, path_, "expected a mapping"); }
    }

    [[nodiscard]] bool has(const std::string &key) {
        seen_.insert(key);
        return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
    }

    template <typename T>
    void read(const std::string &key, T &out) {
        if (!has(key)) { return; }
        out = convert<T>(node_[key], join_path(path_, key));
    }

    template <typename T>
    void read(const std::string &key, std::optional<T> &out) {
        if (!has(key)) { return; }
        out = convert<T>(node_[key], join_path(path_, key));
    }

    template <typename T>
    [[nodiscard]] T string_enum(const std::string &key, T fallback, T (*decode)(const std::string &)) {
        if (!has(key)) { return fallback; }
        const auto text = convert<std::string>(node_[key], join_path(path_, key));
        try {
            return decode(text);
        } catch (const InvalidInput &e) {
            fail(node_[key], join_path(path_, key), e.what());
        }
    }

    [[nodiscard]] Section child(const std::string &key) {
        seen_.insert(key);
        YAML::Node sub = node_ && node_.IsMap() ? node_[key] : YAML::Node();
        return Section(sub, join_path(path_, key), *overridden_);
    }

    void reject_unknown() const {
        if (!node_ || !node_.IsMap()) { return; }
        for (const auto &kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) { fail(kv.first, join_path(path_, key), "unknown key"); }
        }
    }

    [[noreturn]] void fail(const YAML::Node &at, const std::string &path, const std::string &message) const {
        if (overridden_->count(path)) { throw ConfigError(fmt::format("override {}: {}", path, message), 0); }
        const int line = at.Mark().line >= 0 ? at.Mark().line + 1 : 0;
        throw ConfigError(fmt::format("{}: {}", path, message), line);
    }

private:
    template <typename T>
    T convert(const YAML::Node &n, const std::string &path) const {
        try {
            return n.as<T>();
        } catch (const YAML::Exception &) {
            fail(n, path, "malformed value '" + YAML::Dump(n) + "'");
        }
    }

    YAML::Node node_;
    std::string path_;
    const std::set<std::string> *overridden_;
    std::set<std::string> seen_;
};

BetaMode beta_mode_from_string(const std::string &name) {
    if (name == "full") { return BetaMode::Full; }
    if (name == "simplified") { return BetaMode::Simplified; }
    throw InvalidInput("beta_mode must be full or simplified, got '" + name + "'");
}

RegressionBackend backend_from_string(const std::string &name) {
    if (name == "grid") { return RegressionBackend::Grid; }
    if (name == "dense") { return RegressionBackend::Dense; }
    throw InvalidInput("backend must be grid or dense, got '" + name + "'");
}

ProfileKind profile_kind_from_string(const std::string &name) {
    if (name == "auto") { return ProfileKind::Auto; }
    if (name == "polynomial") { return ProfileKind::Polynomial; }
    if (name == "exponential") { return ProfileKind::Exponential; }
    if (name == "explicit") { return ProfileKind::Explicit; }
    if (name == "estimated") { return ProfileKind::Estimated; }
    throw InvalidInput("profile kind must be auto, polynomial, exponential, explicit or estimated, got '" + name + "'");
}

KernelConfig read_kernel(Section s) {
    KernelConfig k;
    k.family = s.string_enum("family", k.family, kernel_family_from_string);
    s.read("lengthscale", k.lengthscale);
    s.read("nu", k.nu);
    s.read("variance", k.variance);
    s.reject_unknown();
    return k;
}

ProfileConfig read_profile(Section s) {
    ProfileConfig p;
    p.kind = s.string_enum("kind", p.kind, profile_kind_from_string);
    s.read("scale", p.scale);
    s.read("exponent", p.exponent);
    s.read("rate", p.rate);
    s.read("eigenvalues", p.eigenvalues);
    s.read("psi_max", p.psi_max);
    s.reject_unknown();
    return p;
}

ExperimentConfig from_node(const YAML::Node &root, const std::set<std::string> &overridden) {
    ExperimentConfig c;
    Section top(root, "", overridden);

    {
        Section s = top.child("mdp");
        auto &m = c.mdp;
        s.read("seed", m.seed);
        s.read("states", m.states);
        s.read("actions", m.actions);
        s.read("state_dim", m.state_dim);
        s.read("action_dim", m.action_dim);
        if (s.has("kernel")) { m.kernel = read_kernel(s.child("kernel")); }
        s.read("mixing_eps", m.mixing_eps);
        s.read("roughness", m.roughness);
        s.read("reward_scale", m.reward_scale);
        s.read("vary_with_seed", m.vary_with_seed);
        s.reject_unknown();
    }
    {
        Section s = top.child("agent");
        auto &a = c.agent;
        s.read("window", a.window);
        s.read("rho", a.rho);
        if (s.has("kernel")) { a.kernel = read_kernel(s.child("kernel")); }
        if (s.has("state_kernel")) { a.state_kernel = read_kernel(s.child("state_kernel")); }
        if (s.has("profile")) { a.profile = read_profile(s.child("profile")); }
        s.read("delta", a.delta);
        s.read("c_f", a.c_f);
        s.read("c_v", a.c_v);
        s.read("psi_max", a.psi_max);
        a.beta_mode = s.string_enum("beta_mode", a.beta_mode, beta_mode_from_string);
        s.read("beta_scale", a.beta_scale);
        s.read("beta", a.beta);
        a.backend = s.string_enum("backend", a.backend, backend_from_string);
        s.reject_unknown();
    }
    {
        Section s = top.child("run");
        auto &r = c.run;
        s.read("horizon", r.horizon);
        s.read("n_seeds", r.n_seeds);
        s.read("seed", r.seed);
        s.read("baselines", r.baselines);
        s.read("solver_tol", r.solver_tol);
        s.read("solver_max_iters", r.solver_max_iters);
        s.read("variance_ratio_samples", r.variance_ratio_samples);
        s.read("checks", r.checks);
        s.read("threads", r.threads);
        s.reject_unknown();
    }
    {
        Section s = top.child("output");
        auto &o = c.output;
        s.read("directory", o.directory);
        s.read("emit_plot_data", o.emit_plot_data);
        if (s.has("gamma_reference")) {
            Section g = s.child("gamma_reference");
            g.read("p", o.gamma_reference_p);
            g.read("c", o.gamma_reference_c);
            g.reject_unknown();
        }
        s.reject_unknown();
    }
    {
        Section s = top.child("sweep");
        s.read("windows", c.sweep.windows);
        s.read("rhos", c.sweep.rhos);
        s.reject_unknown();
    }
    top.reject_unknown();
    return c;
}

void require(bool ok, const std::string &message) {
    if (!ok) { throw ConfigError(message, 0); }
}

void emit_kernel(YAML::Emitter &out, const KernelConfig &k) {
    out << YAML::BeginMap;
    out << YAML::Key << "family" << YAML::Value << to_string(k.family);
    out << YAML::Key << "lengthscale" << YAML::Value << k.lengthscale;
    out << YAML::Key << "nu" << YAML::Value << k.nu;
    out << YAML::Key << "variance" << YAML::Value << k.variance;
    out << YAML::EndMap;
}

}  // namespace

KernelSpec KernelConfig::spec(int input_dim) const {
    KernelSpec k;
    k.family = family;
    k.input_dim = input_dim;
    k.lengthscale = lengthscale;
    k.nu = nu;
    k.variance_scale = variance;
    k.validate();
    return k;
}

void ExperimentConfig::validate() const {
    require(mdp.states >= 2, "mdp.states must be >= 2");
    require(mdp.actions >= 2, "mdp.actions must be >= 2");
    require(mdp.state_dim >= 1 && mdp.action_dim >= 1, "mdp dimensions must be >= 1");
    require(mdp.mixing_eps > 0.0 && mdp.mixing_eps <= 0.5, "mdp.mixing_eps must lie in (0, 0.5]");
    require(mdp.roughness >= 0.0, "mdp.roughness must be nonnegative");
    require(mdp.reward_scale >= 0.0, "mdp.reward_scale must be nonnegative");
    require(agent.window >= 1, "agent.window must be >= 1");
    require(agent.rho > 0.0, "agent.rho must be positive");
    require(agent.delta > 0.0 && agent.delta < 1.0, "agent.delta must lie in (0, 1)");
    require(!agent.c_f || *agent.c_f >= 0.0, "agent.c_f must be nonnegative");
    require(!agent.c_v || *agent.c_v >= 0.0, "agent.c_v must be nonnegative");
    require(!agent.psi_max || *agent.psi_max > 0.0, "agent.psi_max must be positive");
    require(agent.beta_scale > 0.0, "agent.beta_scale must be positive");
    require(!agent.beta || *agent.beta >= 0.0, "agent.beta must be nonnegative");
    require(run.horizon >= 1, "run.horizon must be >= 1");
    require(agent.window <= run.horizon, "agent.window must not exceed run.horizon");
    require(run.n_seeds >= 1, "run.n_seeds must be >= 1");
    require(run.solver_tol > 0.0, "run.solver_tol must be positive");
    require(run.solver_max_iters >= 1, "run.solver_max_iters must be >= 1");
    require(run.variance_ratio_samples >= 0, "run.variance_ratio_samples must be nonnegative");
    require(run.threads >= 0, "run.threads must be nonnegative");
    for (const auto &b : run.baselines) {
        require(b == "random" || b == "greedy_no_bonus" || b == "oracle_policy",
                "unknown baseline '" + b + "' (expected random, greedy_no_bonus or oracle_policy)");
    }
    require(output.gamma_reference_p > 1.0, "output.gamma_reference.p must exceed 1");
    for (int w : sweep.windows) { require(w >= 1 && w <= run.horizon, "sweep.windows entries must lie in [1, horizon]"); }
    for (double r : sweep.rhos) { require(r > 0.0, "sweep.rhos entries must be positive"); }
    try {
        mdp.kernel.spec(mdp.state_dim + mdp.action_dim);
        if (agent.kernel) { agent.kernel->spec(mdp.state_dim + mdp.action_dim); }
        if (agent.state_kernel) { agent.state_kernel->spec(mdp.state_dim); }
    } catch (const InvalidInput &e) {
        throw ConfigError(e.what(), 0);
    }
}

Override Override::parse(const std::string &text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) { throw ConfigError("override '" + text + "' is not key=value", 0); }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

ExperimentConfig parse_config(const std::string &text, const std::vector<Override> &overrides) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw ConfigError(e.msg, e.mark.line + 1);
    }
    if (root.IsNull()) { root = YAML::Node(YAML::NodeType::Map); }
    if (!root.IsMap()) { throw ConfigError("config must be a mapping of sections", 1); }

    std::set<std::string> overridden;
    for (const auto &o : overrides) {
        std::vector<std::string> parts;
        std::stringstream ss(o.key);
        for (std::string part; std::getline(ss, part, '.');) {
            if (part.empty()) { throw ConfigError("override key '" + o.key + "' has an empty component", 0); }
            parts.push_back(part);
        }
        YAML::Node value;
        try {
            value = YAML::Load(o.value);
        } catch (const YAML::ParserException &e) {
            throw ConfigError("override " + o.key + ": " + e.msg, 0);
        }
        // Assigning through operator[] rebinds in yaml-cpp; walk with reset() to keep a handle to the parent map.
        YAML::Node cursor = root;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            YAML::Node next = cursor[parts[i]];
            if (!next || next.IsNull()) {
                cursor[parts[i]] = YAML::Node(YAML::NodeType::Map);
                next = cursor[parts[i]];
            } else if (!next.IsMap()) {
                throw ConfigError("override " + o.key + ": '" + parts[i] + "' is not a section", 0);
            }
            cursor.reset(next);
        }
        cursor[parts.back()] = value;
        overridden.insert(o.key);
    }

    ExperimentConfig config = from_node(root, overridden);
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string &path, const std::vector<Override> &overrides) {
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot open config file '" + path + "'", 0); }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

std::string to_string(BetaMode mode) { return mode == BetaMode::Full ? "full" : "simplified"; }

std::string to_string(RegressionBackend backend) { return backend == RegressionBackend::Grid ? "grid" : "dense"; }

std::string to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::Auto: return "auto";
        case ProfileKind::Polynomial: return "polynomial";
        case ProfileKind::Exponential: return "exponential";
        case ProfileKind::Explicit: return "explicit";
        case ProfileKind::Estimated: return "estimated";
    }
    return "auto";
}

std::string to_yaml(const ExperimentConfig &c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "mdp" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << c.mdp.seed;
    out << YAML::Key << "states" << YAML::Value << c.mdp.states;
    out << YAML::Key << "actions" << YAML::Value << c.mdp.actions;
    out << YAML::Key << "state_dim" << YAML::Value << c.mdp.state_dim;
    out << YAML::Key << "action_dim" << YAML::Value << c.mdp.action_dim;
    out << YAML::Key << "kernel" << YAML::Value;
    emit_kernel(out, c.mdp.kernel);
    out << YAML::Key << "mixing_eps" << YAML::Value << c.mdp.mixing_eps;
    out << YAML::Key << "roughness" << YAML::Value << c.mdp.roughness;
    out << YAML::Key << "reward_scale" << YAML::Value << c.mdp.reward_scale;
    out << YAML::Key << "vary_with_seed" << YAML::Value << c.mdp.vary_with_seed;
    out << YAML::EndMap;

    const auto &a = c.agent;
    out << YAML::Key << "agent" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "window" << YAML::Value << a.window;
    out << YAML::Key << "rho" << YAML::Value << a.rho;
    if (a.kernel) {
        out << YAML::Key << "kernel" << YAML::Value;
        emit_kernel(out, *a.kernel);
    }
    if (a.state_kernel) {
        out << YAML::Key << "state_kernel" << YAML::Value;
        emit_kernel(out, *a.state_kernel);
    }
    out << YAML::Key << "profile" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << to_string(a.profile.kind);
    out << YAML::Key << "scale" << YAML::Value << a.profile.scale;
    out << YAML::Key << "exponent" << YAML::Value << a.profile.exponent;
    out << YAML::Key << "rate" << YAML::Value << a.profile.rate;
    if (!a.profile.eigenvalues.empty()) {
        out << YAML::Key << "eigenvalues" << YAML::Value << YAML::Flow << a.profile.eigenvalues;
    }
    if (a.profile.psi_max) { out << YAML::Key << "psi_max" << YAML::Value << *a.profile.psi_max; }
    out << YAML::EndMap;
    out << YAML::Key << "delta" << YAML::Value << a.delta;
    if (a.c_f) { out << YAML::Key << "c_f" << YAML::Value << *a.c_f; }
    if (a.c_v) { out << YAML::Key << "c_v" << YAML::Value << *a.c_v; }
    if (a.psi_max) { out << YAML::Key << "psi_max" << YAML::Value << *a.psi_max; }
    out << YAML::Key << "beta_mode" << YAML::Value << to_string(a.beta_mode);
    out << YAML::Key << "beta_scale" << YAML::Value << a.beta_scale;
    if (a.beta) { out << YAML::Key << "beta" << YAML::Value << *a.beta; }
    out << YAML::Key << "backend" << YAML::Value << to_string(a.backend);
    out << YAML::EndMap;

    const auto &r = c.run;
    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << r.horizon;
    out << YAML::Key << "n_seeds" << YAML::Value << r.n_seeds;
    out << YAML::Key << "seed" << YAML::Value << r.seed;
    out << YAML::Key << "baselines" << YAML::Value << YAML::Flow << r.baselines;
    out << YAML::Key << "solver_tol" << YAML::Value << r.solver_tol;
    out << YAML::Key << "solver_max_iters" << YAML::Value << r.solver_max_iters;
    out << YAML::Key << "variance_ratio_samples" << YAML::Value << r.variance_ratio_samples;
    out << YAML::Key << "checks" << YAML::Value << r.checks;
    out << YAML::Key << "threads" << YAML::Value << r.threads;
    out << YAML::EndMap;

    out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "directory" << YAML::Value << c.output.directory;
    out << YAML::Key << "emit_plot_data" << YAML::Value << c.output.emit_plot_data;
    out << YAML::Key << "gamma_reference" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p" << YAML::Value << c.output.gamma_reference_p;
    out << YAML::Key << "c" << YAML::Value << c.output.gamma_reference_c;
    out << YAML::EndMap << YAML::EndMap;

    if (!c.sweep.windows.empty() || !c.sweep.rhos.empty()) {
        out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "windows" << YAML::Value << YAML::Flow << c.sweep.windows;
        out << YAML::Key << "rhos" << YAML::Value << YAML::Flow << c.sweep.rhos;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

SmoothMdpParams mdp_params(const ExperimentConfig &config, int seed_index) {
    const auto &m = config.mdp;
    SmoothMdpParams p;
    p.seed = m.seed + (m.vary_with_seed ? static_cast<std::uint64_t>(seed_index) : 0U);
    p.num_states = m.states;
    p.num_actions = m.actions;
    p.state_dim = m.state_dim;
    p.action_dim = m.action_dim;
    p.kernel = m.kernel.spec(m.state_dim + m.action_dim);
    p.mixing_eps = m.mixing_eps;
    p.roughness = m.roughness;
    p.reward_scale = m.reward_scale;
    return p;
}

AgentConfig agent_config(const ExperimentConfig &config, const MdpModel &model) {
    const auto &a = config.agent;
    const int dz = config.mdp.state_dim + config.mdp.action_dim;
    const KernelConfig kernel = a.kernel.value_or(config.mdp.kernel);
    const KernelConfig state_kernel = a.state_kernel.value_or(kernel);
    const KernelSpec state_spec = state_kernel.spec(config.mdp.state_dim);

    EigenProfile profile;
    const auto &pc = a.profile;
    switch (pc.kind) {
        case ProfileKind::Auto: profile = default_profile(state_spec); break;
        case ProfileKind::Polynomial: profile = EigenProfile::polynomial(pc.scale, pc.exponent); break;
        case ProfileKind::Exponential: profile = EigenProfile::exponential(pc.scale, pc.rate); break;
        case ProfileKind::Explicit: profile = EigenProfile::explicit_values(pc.eigenvalues); break;
        case ProfileKind::Estimated: profile = estimate_state_profile(state_spec, model.states); break;
    }
    if (pc.psi_max) { profile.psi_max = *pc.psi_max; }
    profile.validate();

    AgentConfig out;
    out.window = a.window;
    out.rho = a.rho;
    out.horizon = config.run.horizon;
    out.kernel = kernel.spec(dz);
    out.beta_scale = a.beta_scale;
    out.fixed_beta = a.beta;
    out.backend = a.backend;
    const double w = static_cast<double>(a.window);
    out.confidence.c_f = a.c_f.value_or(w);
    out.confidence.c_v = a.c_v.value_or(w);
    out.confidence.psi_max = a.psi_max.value_or(profile.psi_max);
    out.confidence.delta = a.delta;
    out.confidence.rho = a.rho;
    out.confidence.state_profile = profile;
    out.confidence.mode = a.beta_mode;
    return out;
}

}  // namespace kucb
