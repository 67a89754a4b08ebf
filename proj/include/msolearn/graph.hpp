#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace msolearn {

// Finite undirected simple graph with unary label relations.
// Vertices are kept sorted by id so that every iteration order is
// lexicographic and runs are reproducible.
class LabeledGraph {
public:
    LabeledGraph() = default;

    static LabeledGraph from_parts(std::vector<std::string> vertex_ids,
                                   const std::vector<std::pair<std::string, std::string>>& edges,
                                   const std::map<std::string, std::set<std::string>>& labels) {
        LabeledGraph g;
        std::sort(vertex_ids.begin(), vertex_ids.end());
        for (size_t i = 0; i + 1 < vertex_ids.size(); ++i)
            if (vertex_ids[i] == vertex_ids[i + 1])
                throw error("duplicate vertex id: " + vertex_ids[i]);
        g.ids_ = std::move(vertex_ids);
        g.adj_.assign(g.size(), std::vector<bool>(g.size(), false));
        for (auto& [a, b] : edges) g.add_edge(a, b);
        for (auto& [name, verts] : labels) {
            auto& bits = g.labels_[name];
            bits.assign(g.size(), false);
            for (auto& v : verts) bits[g.index_of(v)] = true;
        }
        return g;
    }

    size_t size() const { return ids_.size(); }
    const std::vector<std::string>& vertex_ids() const { return ids_; }
    const std::string& id(size_t i) const { return ids_[i]; }

    bool has_vertex(const std::string& v) const {
        return std::binary_search(ids_.begin(), ids_.end(), v);
    }

    size_t index_of(const std::string& v) const {
        auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
        if (it == ids_.end() || *it != v) throw error("unknown vertex: " + v);
        return static_cast<size_t>(it - ids_.begin());
    }

    bool adjacent(size_t i, size_t j) const { return adj_[i][j]; }

    size_t degree(size_t i) const {
        size_t d = 0;
        for (size_t j = 0; j < size(); ++j) d += adj_[i][j];
        return d;
    }

    size_t edge_count() const {
        size_t m = 0;
        for (size_t i = 0; i < size(); ++i)
            for (size_t j = i + 1; j < size(); ++j) m += adj_[i][j];
        return m;
    }

    // Label lookups are lenient: a label absent from the vocabulary is the
    // empty relation, so extending the vocabulary never changes truth.
    bool has_label(const std::string& name, size_t i) const {
        auto it = labels_.find(name);
        return it != labels_.end() && it->second[i];
    }

    bool label_known(const std::string& name) const { return labels_.count(name) != 0; }

    std::vector<std::string> label_names() const {
        std::vector<std::string> out;
        for (auto& [name, _] : labels_) out.push_back(name);
        return out;  // map iteration: already sorted
    }

    std::vector<size_t> label_members(const std::string& name) const {
        std::vector<size_t> out;
        auto it = labels_.find(name);
        if (it == labels_.end()) return out;
        for (size_t i = 0; i < size(); ++i)
            if (it->second[i]) out.push_back(i);
        return out;
    }

    void add_edge(const std::string& a, const std::string& b) {
        size_t i = index_of(a), j = index_of(b);
        if (i == j) throw error("self-loop on vertex " + a);
        adj_[i][j] = adj_[j][i] = true;
    }

    void set_label(const std::string& name, size_t i, bool on = true) {
        auto& bits = labels_[name];
        if (bits.size() != size()) bits.assign(size(), false);
        bits[i] = on;
    }

    void drop_label(const std::string& name) { labels_.erase(name); }

    bool operator==(const LabeledGraph& o) const {
        return ids_ == o.ids_ && adj_ == o.adj_ && normalized_labels() == o.normalized_labels();
    }

    static LabeledGraph from_json(const nlohmann::json& j) {
        std::vector<std::string> ids;
        std::map<std::string, std::set<std::string>> labels;
        for (auto& name : j.value("labels", nlohmann::json::array()))
            labels[name.get<std::string>()];
        for (auto& v : j.at("vertices")) {
            std::string id = v.at("id").get<std::string>();
            ids.push_back(id);
            for (auto& name : v.value("labels", nlohmann::json::array()))
                labels[name.get<std::string>()].insert(id);
        }
        std::vector<std::pair<std::string, std::string>> edges;
        for (auto& e : j.value("edges", nlohmann::json::array())) {
            if (!e.is_array() || e.size() != 2) throw error("edge entries must be pairs");
            edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
        return from_parts(std::move(ids), edges, labels);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["labels"] = label_names();
        auto verts = nlohmann::json::array();
        for (size_t i = 0; i < size(); ++i) {
            nlohmann::json v;
            v["id"] = ids_[i];
            auto ls = nlohmann::json::array();
            for (auto& [name, bits] : labels_)
                if (bits[i]) ls.push_back(name);
            v["labels"] = ls;
            verts.push_back(v);
        }
        j["vertices"] = verts;
        auto edges = nlohmann::json::array();
        for (size_t i = 0; i < size(); ++i)
            for (size_t k = i + 1; k < size(); ++k)
                if (adj_[i][k]) edges.push_back({ids_[i], ids_[k]});
        j["edges"] = edges;
        return j;
    }

private:
    // Empty label rows compare equal to absent ones.
    std::map<std::string, std::vector<bool>> normalized_labels() const {
        std::map<std::string, std::vector<bool>> out;
        for (auto& [name, bits] : labels_)
            if (std::find(bits.begin(), bits.end(), true) != bits.end()) out[name] = bits;
        return out;
    }

    std::vector<std::string> ids_;
    std::vector<std::vector<bool>> adj_;
    std::map<std::string, std::vector<bool>> labels_;
};

}  // namespace msolearn
