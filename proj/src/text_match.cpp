#include "biasamp/text_match.hpp"

#include <queue>
#include <stdexcept>

namespace biasamp {

std::string normalize_for_match(std::string_view text, std::string* out) {
    std::string local;
    std::string& norm = out ? *out : local;
    norm.clear();
    norm.reserve(text.size());
    bool in_space = false;
    for (char ch : text) {
        if (is_space_byte(static_cast<unsigned char>(ch))) {
            in_space = true;
            continue;
        }
        if (in_space && !norm.empty()) norm.push_back(' ');
        in_space = false;
        norm.push_back(to_lower_ascii(ch));
    }
    return out ? *out : std::move(local);
}

PhraseMatcher::PhraseMatcher(const std::vector<std::string>& phrases) : patterns_(phrases) {
    nodes_.emplace_back();
    nodes_[0].next.fill(0);

    // Trie construction. State 0 is the root; next[] doubles as the goto
    // function once failure links are folded in below.
    std::vector<std::array<int, 256>> trie_children;
    trie_children.push_back(nodes_[0].next);
    std::vector<std::vector<int>> own_outputs(1);
    std::vector<int> fail(1, 0);

    auto ensure_node = [&](void) -> int {
        nodes_.emplace_back();
        nodes_.back().next.fill(-1);
        trie_children.push_back(nodes_.back().next);
        own_outputs.emplace_back();
        fail.push_back(0);
        return static_cast<int>(nodes_.size()) - 1;
    };

    // Build raw trie edges in trie_children (-1 = absent).
    trie_children[0].fill(-1);
    for (std::size_t p = 0; p < patterns_.size(); ++p) {
        if (patterns_[p].empty()) throw std::invalid_argument("PhraseMatcher: empty phrase");
        int state = 0;
        for (unsigned char c : patterns_[p]) {
            int nxt = trie_children[state][c];
            if (nxt < 0) {
                nxt = ensure_node();
                trie_children[state][c] = nxt;
            }
            state = nxt;
        }
        own_outputs[state].push_back(static_cast<int>(p));
    }

    // BFS: compute failure links and close goto into a full DFA.
    std::queue<int> bfs;
    for (int c = 0; c < 256; ++c) {
        int child = trie_children[0][c];
        if (child < 0) {
            nodes_[0].next[c] = 0;
        } else {
            nodes_[0].next[c] = child;
            fail[child] = 0;
            bfs.push(child);
        }
    }
    while (!bfs.empty()) {
        const int state = bfs.front();
        bfs.pop();
        nodes_[state].outputs = own_outputs[state];
        const auto& fo = nodes_[fail[state]].outputs;
        nodes_[state].outputs.insert(nodes_[state].outputs.end(), fo.begin(), fo.end());
        for (int c = 0; c < 256; ++c) {
            int child = trie_children[state][c];
            if (child < 0) {
                nodes_[state].next[c] = nodes_[fail[state]].next[c];
            } else {
                nodes_[state].next[c] = child;
                fail[child] = nodes_[fail[state]].next[c];
                bfs.push(child);
            }
        }
    }
}

void PhraseMatcher::run(std::string_view norm, std::vector<bool>& hits) const {
    const std::size_t n = norm.size();
    int state = 0;
    for (std::size_t i = 0; i < n; ++i) {
        state = nodes_[state].next[static_cast<unsigned char>(norm[i])];
        for (int p : nodes_[state].outputs) {
            if (hits[p]) continue;
            const std::size_t len = patterns_[p].size();
            const std::size_t start = i + 1 - len;
            const bool left_ok =
                start == 0 || !is_word_byte(static_cast<unsigned char>(norm[start - 1]));
            const bool right_ok =
                i + 1 == n || !is_word_byte(static_cast<unsigned char>(norm[i + 1]));
            if (left_ok && right_ok) hits[p] = true;
        }
    }
}

void PhraseMatcher::match(std::string_view text, std::vector<bool>& hits,
                          std::string& scratch) const {
    hits.assign(patterns_.size(), false);
    normalize_for_match(text, &scratch);
    run(scratch, hits);
}

bool PhraseMatcher::contains(std::string_view text, std::size_t pattern_index) const {
    std::vector<bool> hits;
    std::string scratch;
    match(text, hits, scratch);
    return hits.at(pattern_index);
}

}  // namespace biasamp
