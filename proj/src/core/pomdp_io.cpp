#include "core/pomdp_io.hpp"

#include "core/artifact.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace bsqz {

namespace {

struct Token {
    std::string text;
    std::size_t line;
};

std::vector<Token> tokenize(std::istream& in) {
    std::vector<Token> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string cur;
        auto flush = [&] {
            if (!cur.empty()) out.push_back({cur, lineno});
            cur.clear();
        };
        for (char c : line) {
            if (c == ':') {
                flush();
                out.push_back({":", lineno});
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                flush();
            } else {
                cur += c;
            }
        }
        flush();
    }
    return out;
}

std::optional<double> to_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

std::optional<std::size_t> to_index(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_header_keyword(const std::string& s) {
    return s == "discount" || s == "values" || s == "states" || s == "actions" || s == "observations" ||
           s == "start" || s == "T" || s == "O" || s == "R";
}

/// A named axis (states, actions or observations).
struct Axis {
    explicit Axis(std::string w) : what(std::move(w)) {}

    std::string what;
    std::size_t size = 0;
    std::vector<std::string> names;
    std::map<std::string, std::size_t> lookup;
    bool defined = false;

    void define(const std::vector<Token>& toks, std::size_t line) {
        if (defined) throw ParseError(what + " declared twice", line);
        if (toks.empty()) throw ParseError(what + ": missing count or names", line);
        if (toks.size() == 1 && to_index(toks[0].text)) {
            size = *to_index(toks[0].text);
            for (std::size_t i = 0; i < size; ++i) names.push_back(std::to_string(i));
        } else {
            for (const auto& t : toks) {
                if (lookup.count(t.text)) throw ParseError(what + ": duplicate name '" + t.text + "'", t.line);
                lookup[t.text] = names.size();
                names.push_back(t.text);
            }
            size = names.size();
        }
        if (size == 0) throw ParseError(what + ": count must be positive", line);
        defined = true;
    }

    /// Resolves a name, index or wildcard to the list of indices it covers.
    std::vector<std::size_t> resolve(const Token& t) const {
        if (!defined) throw ParseError(what + " used before being declared", t.line);
        std::vector<std::size_t> out;
        if (t.text == "*") {
            for (std::size_t i = 0; i < size; ++i) out.push_back(i);
            return out;
        }
        if (const auto it = lookup.find(t.text); it != lookup.end()) return {it->second};
        if (const auto idx = to_index(t.text)) {
            if (*idx >= size) throw ParseError(what + " index " + t.text + " out of range", t.line);
            return {*idx};
        }
        throw ParseError("unknown " + what + " '" + t.text + "'", t.line);
    }
};

class Parser {
public:
    Parser(std::vector<Token> toks, ParseOptions opt) : toks_(std::move(toks)), opt_(opt) {}

    Pomdp run();

private:
    std::vector<Token> toks_;
    ParseOptions opt_;
    std::size_t pos_ = 0;

    Axis states_{"state"};
    Axis actions_{"action"};
    Axis obs_{"observation"};
    std::optional<double> discount_;
    bool cost_ = false;
    std::vector<Token> start_;
    std::string start_mode_;
    std::size_t start_line_ = 0;

    std::vector<Matrix> T_, O_;
    std::vector<std::vector<std::size_t>> t_line_, o_line_;
    // Reward tensor per (a, s): n x |Z| over (s', z), allocated on first touch.
    std::map<std::pair<std::size_t, std::size_t>, Matrix> r_full_;
    bool models_ready_ = false;

    bool at_entry_start(std::size_t i) const {
        if (i + 1 >= toks_.size()) return false;
        const auto& t = toks_[i].text;
        if (t == "start" && (toks_[i + 1].text == "include" || toks_[i + 1].text == "exclude")) return true;
        return is_header_keyword(t) && toks_[i + 1].text == ":";
    }

    /// Tokens up to the next entry start.
    std::vector<Token> body() {
        std::vector<Token> out;
        while (pos_ < toks_.size() && !at_entry_start(pos_)) out.push_back(toks_[pos_++]);
        return out;
    }

    void ensure_models(std::size_t line) {
        if (models_ready_) return;
        if (!states_.defined || !actions_.defined || !obs_.defined)
            throw ParseError("states, actions and observations must be declared before T/O/R entries", line);
        const auto n = static_cast<Eigen::Index>(states_.size);
        const auto z = static_cast<Eigen::Index>(obs_.size);
        T_.assign(actions_.size, Matrix::Zero(n, n));
        O_.assign(actions_.size, Matrix::Zero(n, z));
        t_line_.assign(actions_.size, std::vector<std::size_t>(states_.size, 0));
        o_line_.assign(actions_.size, std::vector<std::size_t>(states_.size, 0));
        models_ready_ = true;
    }

    static std::vector<std::vector<Token>> split(const std::vector<Token>& toks) {
        std::vector<std::vector<Token>> segs(1);
        for (const auto& t : toks) {
            if (t.text == ":") segs.emplace_back();
            else segs.back().push_back(t);
        }
        return segs;
    }

    double number(const Token& t) const {
        const auto v = to_number(t.text);
        if (!v) throw ParseError("expected a number, got '" + t.text + "'", t.line);
        return *v;
    }

    std::vector<double> numbers(const std::vector<Token>& toks, std::size_t from, std::size_t expect,
                                std::size_t line) const {
        if (toks.size() - from != expect)
            throw ParseError("expected " + std::to_string(expect) + " values, got " + std::to_string(toks.size() - from),
                             toks.size() > from ? toks[from].line : line);
        std::vector<double> out;
        for (std::size_t i = from; i < toks.size(); ++i) out.push_back(number(toks[i]));
        return out;
    }

    void parse_header(const std::string& key, std::size_t line);
    void parse_T(const std::vector<Token>& toks, std::size_t line);
    void parse_O(const std::vector<Token>& toks, std::size_t line);
    void parse_R(const std::vector<Token>& toks, std::size_t line);
    void set_reward(const std::vector<std::size_t>& as, const std::vector<std::size_t>& ss,
                    const std::vector<std::size_t>& sps, const std::vector<std::size_t>& zs, double v);
    Belief build_start() const;
    void check_rows(std::vector<Matrix>& mats, const std::vector<std::vector<std::size_t>>& lines,
                    const std::string& what) const;
};

void Parser::parse_header(const std::string& key, std::size_t line) {
    auto toks = body();
    if (key == "discount") {
        if (toks.size() != 1) throw ParseError("discount takes one value", line);
        discount_ = number(toks[0]);
        if (!(*discount_ > 0.0 && *discount_ < 1.0))
            throw ParseError("discount must lie in (0, 1), got " + toks[0].text, line);
    } else if (key == "values") {
        if (toks.size() != 1 || (toks[0].text != "reward" && toks[0].text != "cost"))
            throw ParseError("values must be 'reward' or 'cost'", line);
        cost_ = toks[0].text == "cost";
    } else if (key == "states") {
        states_.define(toks, line);
    } else if (key == "actions") {
        actions_.define(toks, line);
    } else if (key == "observations") {
        obs_.define(toks, line);
    }
}

void Parser::parse_T(const std::vector<Token>& toks, std::size_t line) {
    ensure_models(line);
    const auto segs = split(toks);
    const auto n = states_.size;
    if (segs.empty() || segs[0].empty()) throw ParseError("T: missing action", line);
    const auto as = actions_.resolve(segs[0][0]);
    if (segs.size() == 1) {
        const auto& s0 = segs[0];
        Matrix m;
        if (s0.size() == 2 && s0[1].text == "identity") {
            m = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        } else if (s0.size() == 2 && s0[1].text == "uniform") {
            m = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
        } else {
            const auto v = numbers(s0, 1, n * n, line);
            m = Eigen::Map<const RowMatrix>(v.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        }
        for (auto a : as) {
            T_[a] = m;
            for (auto& l : t_line_[a]) l = line;
        }
    } else if (segs.size() == 2) {
        const auto& s1 = segs[1];
        if (s1.empty()) throw ParseError("T: missing start state", line);
        const auto ss = states_.resolve(s1[0]);
        Vector row;
        if (s1.size() == 2 && s1[1].text == "uniform") {
            row = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
        } else {
            const auto v = numbers(s1, 1, n, line);
            row = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(n));
        }
        for (auto a : as)
            for (auto s : ss) {
                T_[a].row(static_cast<Eigen::Index>(s)) = row.transpose();
                t_line_[a][s] = line;
            }
    } else if (segs.size() == 3) {
        if (segs[1].size() != 1 || segs[2].size() != 2) throw ParseError("T: expected 'a : s : s' value'", line);
        const auto ss = states_.resolve(segs[1][0]);
        const auto sps = states_.resolve(segs[2][0]);
        const double v = number(segs[2][1]);
        for (auto a : as)
            for (auto s : ss) {
                for (auto sp : sps) T_[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(sp)) = v;
                t_line_[a][s] = line;
            }
    } else {
        throw ParseError("T: too many fields", line);
    }
}

void Parser::parse_O(const std::vector<Token>& toks, std::size_t line) {
    ensure_models(line);
    const auto segs = split(toks);
    const auto n = states_.size;
    const auto nz = obs_.size;
    if (segs.empty() || segs[0].empty()) throw ParseError("O: missing action", line);
    const auto as = actions_.resolve(segs[0][0]);
    if (segs.size() == 1) {
        const auto& s0 = segs[0];
        Matrix m;
        if (s0.size() == 2 && s0[1].text == "uniform") {
            m = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nz), 1.0 / static_cast<double>(nz));
        } else {
            const auto v = numbers(s0, 1, n * nz, line);
            m = Eigen::Map<const RowMatrix>(v.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nz));
        }
        for (auto a : as) {
            O_[a] = m;
            for (auto& l : o_line_[a]) l = line;
        }
    } else if (segs.size() == 2) {
        const auto& s1 = segs[1];
        if (s1.empty()) throw ParseError("O: missing end state", line);
        const auto sps = states_.resolve(s1[0]);
        Vector row;
        if (s1.size() == 2 && s1[1].text == "uniform") {
            row = Vector::Constant(static_cast<Eigen::Index>(nz), 1.0 / static_cast<double>(nz));
        } else {
            const auto v = numbers(s1, 1, nz, line);
            row = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(nz));
        }
        for (auto a : as)
            for (auto sp : sps) {
                O_[a].row(static_cast<Eigen::Index>(sp)) = row.transpose();
                o_line_[a][sp] = line;
            }
    } else if (segs.size() == 3) {
        if (segs[1].size() != 1 || segs[2].size() != 2) throw ParseError("O: expected 'a : s' : z value'", line);
        const auto sps = states_.resolve(segs[1][0]);
        const auto zs = obs_.resolve(segs[2][0]);
        const double v = number(segs[2][1]);
        for (auto a : as)
            for (auto sp : sps) {
                for (auto z : zs) O_[a](static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(z)) = v;
                o_line_[a][sp] = line;
            }
    } else {
        throw ParseError("O: too many fields", line);
    }
}

void Parser::set_reward(const std::vector<std::size_t>& as, const std::vector<std::size_t>& ss,
                        const std::vector<std::size_t>& sps, const std::vector<std::size_t>& zs, double v) {
    const auto n = static_cast<Eigen::Index>(states_.size);
    const auto nz = static_cast<Eigen::Index>(obs_.size);
    for (auto a : as)
        for (auto s : ss) {
            auto [it, fresh] = r_full_.try_emplace({a, s});
            if (fresh) it->second = Matrix::Zero(n, nz);
            for (auto sp : sps)
                for (auto z : zs) it->second(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(z)) = v;
        }
}

void Parser::parse_R(const std::vector<Token>& toks, std::size_t line) {
    ensure_models(line);
    const auto segs = split(toks);
    const auto n = states_.size;
    const auto nz = obs_.size;
    if (segs.size() < 2 || segs[0].size() != 1 || segs[1].empty()) throw ParseError("R: expected 'a : s ...'", line);
    const auto as = actions_.resolve(segs[0][0]);
    const auto ss = states_.resolve(segs[1][0]);
    std::vector<std::size_t> all_sp(n), all_z(nz);
    for (std::size_t i = 0; i < n; ++i) all_sp[i] = i;
    for (std::size_t i = 0; i < nz; ++i) all_z[i] = i;

    if (segs.size() == 2) {
        const auto v = numbers(segs[1], 1, n * nz, line);
        for (std::size_t sp = 0; sp < n; ++sp)
            for (std::size_t z = 0; z < nz; ++z) set_reward(as, ss, {sp}, {z}, v[sp * nz + z]);
    } else if (segs.size() == 3) {
        if (segs[1].size() != 1 || segs[2].empty()) throw ParseError("R: malformed entry", line);
        const auto sps = states_.resolve(segs[2][0]);
        const auto v = numbers(segs[2], 1, nz, line);
        for (std::size_t z = 0; z < nz; ++z) set_reward(as, ss, sps, {z}, v[z]);
    } else if (segs.size() == 4) {
        if (segs[1].size() != 1 || segs[2].size() != 1 || segs[3].size() != 2)
            throw ParseError("R: expected 'a : s : s' : z value'", line);
        const auto sps = states_.resolve(segs[2][0]);
        const auto zs = obs_.resolve(segs[3][0]);
        set_reward(as, ss, sps, zs, number(segs[3][1]));
    } else {
        throw ParseError("R: too many fields", line);
    }
}

Belief Parser::build_start() const {
    const auto n = static_cast<Eigen::Index>(states_.size);
    if (start_mode_.empty()) return Belief();
    Belief b = Belief::Zero(n);
    if (start_mode_ == "include" || start_mode_ == "exclude") {
        std::vector<char> in(states_.size, start_mode_ == "exclude");
        for (const auto& t : start_)
            for (auto s : states_.resolve(t)) in[s] = start_mode_ == "include";
        double count = 0.0;
        for (char c : in) count += c;
        if (count == 0.0) throw ParseError("start: no states selected", start_line_);
        for (Eigen::Index s = 0; s < n; ++s) b[s] = in[static_cast<std::size_t>(s)] ? 1.0 / count : 0.0;
        return b;
    }
    if (start_.size() == 1 && start_[0].text == "uniform") return Belief::Constant(n, 1.0 / static_cast<double>(n));
    if (start_.size() == static_cast<std::size_t>(n) && (n > 1 || to_number(start_[0].text))) {
        bool all_numbers = true;
        for (const auto& t : start_) all_numbers = all_numbers && to_number(t.text).has_value();
        if (all_numbers) {
            for (Eigen::Index s = 0; s < n; ++s) b[s] = number(start_[static_cast<std::size_t>(s)]);
            if ((b.array() < 0.0).any()) throw ParseError("start: negative probability", start_line_);
            const double sum = b.sum();
            if (std::abs(sum - 1.0) > opt_.renormalise_tol)
                throw ParseError("start: probabilities sum to " + std::to_string(sum), start_line_);
            return b / sum;
        }
    }
    if (start_.size() == 1) {
        const auto ss = states_.resolve(start_[0]);
        if (ss.size() == 1) {
            b[static_cast<Eigen::Index>(ss[0])] = 1.0;
            return b;
        }
        return Belief::Constant(n, 1.0 / static_cast<double>(n));
    }
    throw ParseError("start: expected " + std::to_string(n) + " probabilities, a state, or 'uniform'", start_line_);
}

void Parser::check_rows(std::vector<Matrix>& mats, const std::vector<std::vector<std::size_t>>& lines,
                        const std::string& what) const {
    for (std::size_t a = 0; a < mats.size(); ++a) {
        for (Eigen::Index s = 0; s < mats[a].rows(); ++s) {
            const std::size_t line = lines[a][static_cast<std::size_t>(s)];
            auto row = mats[a].row(s);
            const std::string where = what + " row (action " + actions_.names[a] + ", state " +
                                      states_.names[static_cast<std::size_t>(s)] + ")";
            if (!row.allFinite() || (row.array() < 0.0).any()) throw ParseError(where + " has invalid entries", line);
            const double sum = row.sum();
            if (std::abs(sum - 1.0) > opt_.renormalise_tol)
                throw ParseError(where + " sums to " + std::to_string(sum), line);
            if (std::abs(sum - 1.0) > kStochasticTol) row /= sum;
        }
    }
}

Pomdp Parser::run() {
    while (pos_ < toks_.size()) {
        if (!at_entry_start(pos_)) throw ParseError("unexpected token '" + toks_[pos_].text + "'", toks_[pos_].line);
        const Token key = toks_[pos_++];
        if (key.text == "start" && (toks_[pos_].text == "include" || toks_[pos_].text == "exclude")) {
            start_mode_ = toks_[pos_++].text;
            if (pos_ >= toks_.size() || toks_[pos_].text != ":") throw ParseError("start " + start_mode_ + ": expected ':'", key.line);
            ++pos_;
            start_ = body();
            start_line_ = key.line;
            continue;
        }
        ++pos_;  // ':'
        if (key.text == "start") {
            start_mode_ = "list";
            start_ = body();
            start_line_ = key.line;
        } else if (key.text == "T") {
            parse_T(body(), key.line);
        } else if (key.text == "O") {
            parse_O(body(), key.line);
        } else if (key.text == "R") {
            parse_R(body(), key.line);
        } else {
            parse_header(key.text, key.line);
        }
    }
    if (!discount_) throw ParseError("missing discount", toks_.empty() ? 0 : toks_.back().line);
    ensure_models(toks_.empty() ? 0 : toks_.back().line);
    check_rows(T_, t_line_, "transition");
    check_rows(O_, o_line_, "observation");

    Pomdp m;
    m.n_states = states_.size;
    m.n_actions = actions_.size;
    m.n_obs = obs_.size;
    m.state_names = states_.names;
    m.action_names = actions_.names;
    m.obs_names = obs_.names;
    m.discount = *discount_;
    m.transition = T_;
    m.observation = O_;
    m.reward = Matrix::Zero(static_cast<Eigen::Index>(m.n_states), static_cast<Eigen::Index>(m.n_actions));
    for (const auto& [key, r] : r_full_) {
        const auto [a, s] = key;
        const auto si = static_cast<Eigen::Index>(s);
        // E[r | s, a] = sum_{s', z} T(s'|s,a) Omega(z|s',a) r(s', z)
        const double v = (T_[a].row(si).transpose().array() * (O_[a].array() * r.array()).rowwise().sum()).sum();
        m.reward(si, static_cast<Eigen::Index>(a)) = cost_ ? -v : v;
    }
    m.initial_belief = build_start();
    require_valid(m);
    return m;
}

}  // namespace

Pomdp parse_pomdp(std::istream& in, const ParseOptions& opt) {
    Parser p(tokenize(in), opt);
    return p.run();
}

Pomdp parse_pomdp_string(const std::string& text, const ParseOptions& opt) {
    std::istringstream in(text);
    return parse_pomdp(in, opt);
}

Pomdp load_pomdp(const std::string& path, const ParseOptions& opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    if (has_artifact_magic(in)) {
        in.close();
        return load_pomdp_artifact(path);
    }
    in.clear();
    in.seekg(0);
    return parse_pomdp(in, opt);
}

}  // namespace bsqz
