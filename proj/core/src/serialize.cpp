#include "nvi/serialize.hpp"

#include "nvi/errors.hpp"

namespace nvi {

using nlohmann::json;

json net_to_json(const QEntry& entry) {
    return std::visit(
        [](const auto& net) -> json {
            using T = std::decay_t<decltype(net)>;
            if constexpr (std::is_same_v<T, TwoLayerNet>) {
                return json{{"type", "two_layer"},
                            {"m", net.width()},
                            {"d", net.input_dim()},
                            {"h_cap", net.h_cap()},
                            {"path_budget", net.path_budget()},
                            {"outer", net.outer},
                            {"inner", net.inner},
                            {"biases", net.biases}};
            } else if constexpr (std::is_same_v<T, DeepReluNet>) {
                json layers = json::array();
                for (int l = 0; l < net.depth(); ++l) {
                    json wa = json::array();
                    for (const auto& e : net.w_active[static_cast<std::size_t>(l)])
                        wa.push_back(json::array({e.row, e.col}));
                    layers.push_back(json{{"weights", net.weights[static_cast<std::size_t>(l)]},
                                          {"bias", net.bias[static_cast<std::size_t>(l)]},
                                          {"w_active", wa},
                                          {"b_active", net.b_active[static_cast<std::size_t>(l)]}});
                }
                return json{{"type", "deep"},
                            {"L", net.depth()},
                            {"m", net.width()},
                            {"d", net.input_dim()},
                            {"h_cap", net.h_cap()},
                            {"S", net.sparsity_budget()},
                            {"B", net.entry_bound()},
                            {"layers", layers}};
            } else {
                return json{{"type", "tabular"},
                            {"states", net.states},
                            {"A", net.action_count},
                            {"values", net.values},
                            {"h_cap", net.h_cap}};
            }
        },
        entry);
}

QEntry net_from_json(const json& doc) {
    const std::string type = doc.at("type").get<std::string>();
    if (type == "two_layer") {
        TwoLayerNet net(doc.at("m").get<int>(), doc.at("d").get<int>(), doc.at("h_cap").get<double>(),
                        doc.at("path_budget").get<double>());
        doc.at("outer").get_to(net.outer);
        doc.at("inner").get_to(net.inner);
        doc.at("biases").get_to(net.biases);
        return net;
    }
    if (type == "deep") {
        DeepReluNet net(doc.at("L").get<int>(), doc.at("m").get<int>(), doc.at("d").get<int>(),
                        doc.at("h_cap").get<double>(), doc.at("S").get<int>(),
                        doc.at("B").get<double>(), 0);
        const auto& layers = doc.at("layers");
        for (int l = 0; l < net.depth(); ++l) {
            const auto& layer = layers.at(static_cast<std::size_t>(l));
            layer.at("weights").get_to(net.weights[static_cast<std::size_t>(l)]);
            layer.at("bias").get_to(net.bias[static_cast<std::size_t>(l)]);
            net.w_active[static_cast<std::size_t>(l)].clear();
            for (const auto& pair : layer.at("w_active"))
                net.w_active[static_cast<std::size_t>(l)].push_back(
                    {pair.at(0).get<int>(), pair.at(1).get<int>()});
            layer.at("b_active").get_to(net.b_active[static_cast<std::size_t>(l)]);
        }
        return net;
    }
    if (type == "tabular") {
        TabularQ q;
        doc.at("states").get_to(q.states);
        doc.at("A").get_to(q.action_count);
        doc.at("values").get_to(q.values);
        doc.at("h_cap").get_to(q.h_cap);
        return q;
    }
    throw config_error("net_from_json: unknown net type '" + type + "'");
}

json qstack_to_json(const QStack& stack) {
    json nets = json::array();
    for (const auto& entry : stack.entries) nets.push_back(net_to_json(entry));
    return json{{"horizon", stack.horizon}, {"action_count", stack.action_count}, {"nets", nets}};
}

QStack qstack_from_json(const json& doc) {
    QStack stack;
    doc.at("horizon").get_to(stack.horizon);
    doc.at("action_count").get_to(stack.action_count);
    for (const auto& net : doc.at("nets")) stack.entries.push_back(net_from_json(net));
    return stack;
}

}  // namespace nvi
