#include "kucb/mdp_io.hpp"

#include "kucb/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace kucb {

using nlohmann::json;

std::string model_to_json(const MdpModel &model) {
    const int ns = model.num_states();
    const int na = model.num_actions();
    json doc;
    doc["mixing_eps"] = model.mixing_eps;
    doc["states"] = model.states;
    doc["actions"] = model.actions;
    json rewards = json::array();
    json transitions = json::array();
    for (int s = 0; s < ns; ++s) {
        json r_row = json::array();
        json t_row = json::array();
        for (int a = 0; a < na; ++a) {
            r_row.push_back(model.rewards(s, a));
            json t = json::array();
            for (int sp = 0; sp < ns; ++sp) { t.push_back(model.transitions(model.row(s, a), sp)); }
            t_row.push_back(std::move(t));
        }
        rewards.push_back(std::move(r_row));
        transitions.push_back(std::move(t_row));
    }
    doc["rewards"] = std::move(rewards);
    doc["transitions"] = std::move(transitions);
    return doc.dump(1) + "\n";
}

MdpModel model_from_json(const std::string &text) {
    MdpModel model;
    try {
        const json doc = json::parse(text);
        model.mixing_eps = doc.at("mixing_eps").get<double>();
        model.states = doc.at("states").get<std::vector<Point>>();
        model.actions = doc.at("actions").get<std::vector<Point>>();
        const int ns = model.num_states();
        const int na = model.num_actions();
        const auto &rewards = doc.at("rewards");
        const auto &transitions = doc.at("transitions");
        model.rewards.resize(ns, na);
        model.transitions.resize(static_cast<Eigen::Index>(ns) * na, ns);
        for (int s = 0; s < ns; ++s) {
            for (int a = 0; a < na; ++a) {
                model.rewards(s, a) = rewards.at(s).at(a).get<double>();
                const auto row = transitions.at(s).at(a).get<std::vector<double>>();
                if (static_cast<int>(row.size()) != ns) { throw InvalidInput("transition row has the wrong length"); }
                for (int sp = 0; sp < ns; ++sp) { model.transitions(model.row(s, a), sp) = row[static_cast<std::size_t>(sp)]; }
            }
        }
    } catch (const json::exception &e) {
        throw InvalidInput(std::string("malformed MDP model file: ") + e.what());
    }
    model.validate();
    return model;
}

void write_model(const MdpModel &model, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw InvalidInput("cannot open " + path.string() + " for writing"); }
    out << model_to_json(model);
}

MdpModel read_model(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw InvalidInput("cannot open " + path.string()); }
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace kucb
