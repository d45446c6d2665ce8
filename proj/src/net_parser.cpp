#include "parrep/net_parser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace parrep {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return trim(hash == std::string_view::npos ? line : line.substr(0, hash));
}

std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

bool is_name(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::optional<double> to_double(std::string_view s) {
    double v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> to_unsigned(std::string_view s) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec == std::errc() && p == end) return v;
    // allow integral scientific notation such as 1e4
    const auto d = to_double(s);
    if (d && *d >= 0 && *d <= 9007199254740992.0 && std::floor(*d) == *d) return static_cast<std::uint64_t>(*d);
    return std::nullopt;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

using Complex = std::vector<ReactantTerm>;

Complex parse_complex(std::string_view text, const std::map<std::string, std::size_t, std::less<>>& species,
                      std::size_t line) {
    text = trim(text);
    if (text.empty()) throw ParseError(line, "empty complex; write 0 for no species");
    if (text == "0") return {};
    Complex out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto plus = text.find('+', start);
        if (plus == std::string_view::npos) plus = text.size();
        const auto part = words(text.substr(start, plus - start));
        start = plus + 1;

        Count coef = 1;
        std::string_view name;
        if (part.size() == 2) {
            if (part[0].size() != 1 || part[0][0] < '1' || part[0][0] > '9')
                throw ParseError(line, "coefficient '" + std::string(part[0]) + "' must be a digit 1..9");
            coef = part[0][0] - '0';
            name = part[1];
        } else if (part.size() == 1) {
            name = part[0];
            if (!name.empty() && std::isdigit(static_cast<unsigned char>(name[0]))) {
                if (name[0] == '0' || (name.size() > 1 && std::isdigit(static_cast<unsigned char>(name[1]))))
                    throw ParseError(line, "coefficient in '" + std::string(name) + "' must be a digit 1..9");
                coef = name[0] - '0';
                name.remove_prefix(1);
            }
        } else {
            throw ParseError(line, "malformed complex term");
        }
        if (!is_name(name)) throw ParseError(line, "malformed species name '" + std::string(name) + "'");
        auto it = species.find(name);
        if (it == species.end()) throw ParseError(line, "undeclared species '" + std::string(name) + "'");
        auto same = std::find_if(out.begin(), out.end(), [&](const ReactantTerm& t) { return t.species == it->second; });
        if (same != out.end())
            same->multiplicity += coef;
        else
            out.push_back({it->second, coef});
    }
    return out;
}

Complex reactants_of(const Propensity& p) {
    if (std::holds_alternative<ConstantRate>(p)) return {};
    if (const auto* l = std::get_if<LinearRate>(&p)) return {{l->species, 1}};
    return std::get<MassActionRate>(p).reactants;
}

std::string format_complex(const std::vector<Count>& counts, const Complex& order,
                           const std::vector<std::string>& names) {
    std::vector<std::size_t> seq;
    for (const auto& t : order)
        if (counts[t.species] > 0) seq.push_back(t.species);
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] > 0 && std::find(seq.begin(), seq.end(), i) == seq.end()) seq.push_back(i);
    if (seq.empty()) return "0";
    std::string out;
    for (auto i : seq) {
        if (counts[i] > 9) throw InputError("coefficient above 9 cannot be written in the network format");
        if (!out.empty()) out += " + ";
        if (counts[i] > 1) out += std::to_string(counts[i]) + " ";
        out += names[i];
    }
    return out;
}

}  // namespace

ReactionNetwork parse_network(std::string_view text, std::vector<std::string>* warnings) {
    std::vector<std::string> names;
    std::map<std::string, std::size_t, std::less<>> index;
    std::vector<Reaction> reactions;
    std::vector<bool> slow;
    std::size_t line_no = 0;
    bool declared = false;

    for (auto raw : split_lines(text)) {
        ++line_no;
        const auto line = strip_comment(raw);
        if (line.empty()) continue;
        const auto w = words(line);
        if (w[0] == "species") {
            if (declared) throw ParseError(line_no, "species declared twice");
            if (w.size() < 2) throw ParseError(line_no, "species line lists no species");
            for (std::size_t k = 1; k < w.size(); ++k) {
                if (!is_name(w[k])) throw ParseError(line_no, "malformed species name '" + std::string(w[k]) + "'");
                if (!index.emplace(std::string(w[k]), names.size()).second)
                    throw ParseError(line_no, "duplicate species '" + std::string(w[k]) + "'");
                names.emplace_back(w[k]);
            }
            declared = true;
            continue;
        }
        if (!declared) throw ParseError(line_no, "reaction before the species line");

        const auto arrow = line.find("->");
        const auto at = line.find('@');
        if (arrow == std::string_view::npos || at == std::string_view::npos || at < arrow)
            throw ParseError(line_no, "expected 'reactants -> products @ rate [slow|fast]'");
        const auto lhs = parse_complex(line.substr(0, arrow), index, line_no);
        const auto rhs = parse_complex(line.substr(arrow + 2, at - arrow - 2), index, line_no);
        const auto tail = words(line.substr(at + 1));
        if (tail.empty() || tail.size() > 2) throw ParseError(line_no, "expected 'rate [slow|fast]' after '@'");
        const auto rate = to_double(tail[0]);
        if (!rate) throw ParseError(line_no, "malformed rate '" + std::string(tail[0]) + "'");
        if (!(*rate > 0)) throw ParseError(line_no, "rate must be positive");
        bool is_slow = true;
        if (tail.size() == 2) {
            if (tail[1] == "fast")
                is_slow = false;
            else if (tail[1] != "slow")
                throw ParseError(line_no, "flag must be 'slow' or 'fast', got '" + std::string(tail[1]) + "'");
        }

        std::vector<Count> eta(names.size(), 0);
        for (const auto& t : lhs) eta[t.species] -= t.multiplicity;
        for (const auto& t : rhs) eta[t.species] += t.multiplicity;
        Propensity p;
        if (lhs.empty())
            p = ConstantRate{*rate};
        else if (lhs.size() == 1 && lhs[0].multiplicity == 1)
            p = LinearRate{*rate, lhs[0].species};
        else
            p = MassActionRate{*rate, lhs};
        if (std::all_of(eta.begin(), eta.end(), [](Count c) { return c == 0; }) && warnings)
            warnings->push_back("line " + std::to_string(line_no) + ": reaction has no net state change");
        reactions.push_back({std::move(p), std::move(eta)});
        slow.push_back(is_slow);
    }
    if (!declared) throw ParseError(0, "missing species line");
    if (reactions.empty()) throw ParseError(0, "network has no reactions");
    return {std::move(names), std::move(reactions), std::move(slow)};
}

std::string serialize_network(const ReactionNetwork& net) {
    const auto& names = net.species_names();
    std::string out = "species";
    for (const auto& n : names) out += " " + n;
    out += "\n";
    for (std::size_t j = 0; j < net.reaction_count(); ++j) {
        const auto& r = net.reaction(j);
        const auto lhs = reactants_of(r.propensity);
        std::vector<Count> in(names.size(), 0);
        for (const auto& t : lhs) in[t.species] += t.multiplicity;
        std::vector<Count> prod(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            prod[i] = in[i] + r.state_change[i];
            if (prod[i] < 0) throw InputError("reaction " + std::to_string(j + 1) + " has no product form");
        }
        out += format_complex(in, lhs, names) + " -> " + format_complex(prod, {}, names) + " @ " +
               format_double(rate_constant(r.propensity)) + (net.is_slow(j) ? " slow" : " fast") + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------

ObservableExpr parse_observable(std::string_view text) {
    const std::string_view src = trim(text);
    if (src.empty()) throw ParseError(0, "empty observable expression");
    ObservableExpr f;
    std::size_t i = 0;
    bool has_constant = false;
    bool first = true;
    bool decorated = false;
    auto skip = [&] {
        while (i < src.size() && (src[i] == ' ' || src[i] == '\t')) ++i;
    };
    while (true) {
        skip();
        double sign = 1;
        if (!first) {
            if (i >= src.size()) break;
            if (src[i] != '+' && src[i] != '-') throw ParseError(0, "expected '+' or '-' in '" + std::string(src) + "'");
            sign = src[i] == '-' ? -1 : 1;
            ++i;
            skip();
            decorated = true;
        } else if (i < src.size() && (src[i] == '-' || src[i] == '+')) {
            sign = src[i] == '-' ? -1 : 1;
            ++i;
            skip();
            decorated = true;
        }
        first = false;

        std::optional<double> coef;
        std::size_t j = i;
        const bool numeric = i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.');
        while (numeric && j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.' || src[j] == 'e' ||
                                  src[j] == 'E' ||
                                  ((src[j] == '-' || src[j] == '+') && j > i && (src[j - 1] == 'e' || src[j - 1] == 'E'))))
            ++j;
        if (j > i) {
            coef = to_double(src.substr(i, j - i));
            if (!coef) throw ParseError(0, "malformed number in '" + std::string(src) + "'");
            i = j;
            skip();
            if (i < src.size() && src[i] == '*') {
                ++i;
                skip();
            }
        }
        j = i;
        while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
        const auto name = src.substr(i, j - i);
        i = j;
        if (name.empty()) {
            if (!coef) throw ParseError(0, "malformed observable '" + std::string(src) + "'");
            f.constant += sign * *coef;
            has_constant = true;
            continue;
        }
        if (!is_name(name)) throw ParseError(0, "malformed species name '" + std::string(name) + "'");
        if (std::any_of(f.terms.begin(), f.terms.end(), [&](const auto& t) { return t.first == name; }))
            throw ParseError(0, "species '" + std::string(name) + "' repeated in observable");
        if (coef) decorated = true;
        f.terms.emplace_back(std::string(name), sign * coef.value_or(1.0));
    }
    if (has_constant && !f.terms.empty())
        throw ParseError(0, "observable mixes a constant with species terms: '" + std::string(src) + "'");
    f.bare = f.terms.size() == 1 && !decorated;
    return f;
}

std::string format_observable(const ObservableExpr& f) {
    if (f.terms.empty()) return format_double(f.constant);
    if (f.bare) return f.terms[0].first;
    std::string out;
    for (std::size_t k = 0; k < f.terms.size(); ++k) {
        const double w = f.terms[k].second;
        if (k == 0)
            out += format_double(w);
        else
            out += (std::signbit(w) ? " - " : " + ") + format_double(std::abs(w));
        out += "*" + f.terms[k].first;
    }
    return out;
}

ObservableSpec resolve_observable(const ObservableExpr& f, const ReactionNetwork& net) {
    if (f.terms.empty()) return ConstantValue{f.constant};
    if (f.bare) return Coordinate{net.species_index(f.terms[0].first)};
    std::vector<double> w(net.species_count(), 0.0);
    for (const auto& [name, weight] : f.terms) w[net.species_index(name)] = weight;
    return LinearCombination{std::move(w)};
}

// ---------------------------------------------------------------------------

std::string to_string(AlgorithmKind a) {
    switch (a) {
        case AlgorithmKind::ssa: return "ssa";
        case AlgorithmKind::ctmc_parrep: return "ctmc-parrep";
        case AlgorithmKind::embedded_parrep: return "embedded-parrep";
    }
    return "?";
}

std::string to_string(DephasingKind d) {
    return d == DephasingKind::rejection ? "rejection" : "fleming-viot";
}

ExperimentConfig parse_experiment(std::string_view text) {
    ExperimentConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;

    for (auto raw : split_lines(text)) {
        ++line_no;
        const auto line = strip_comment(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
        if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");

        auto real = [&](double lo_exclusive) {
            const auto v = to_double(value);
            if (!v) throw ParseError(line_no, "'" + key + "' must be a number");
            if (!(*v > lo_exclusive)) throw ParseError(line_no, "'" + key + "' must be positive");
            return *v;
        };
        auto whole = [&](std::uint64_t min) {
            const auto v = to_unsigned(value);
            if (!v) throw ParseError(line_no, "'" + key + "' must be a non-negative integer");
            if (*v < min) throw ParseError(line_no, "'" + key + "' must be >= " + std::to_string(min));
            return *v;
        };
        auto named = [&](std::string_view prefix, std::vector<NamedObservable>& into) {
            const std::string name = key.substr(prefix.size());
            if (!is_name(name)) throw ParseError(line_no, "malformed observable name '" + name + "'");
            try {
                into.push_back({name, parse_observable(value)});
            } catch (const ParseError& e) {
                throw ParseError(line_no, e.what());
            }
        };

        if (key == "network") {
            cfg.network = std::string(value);
        } else if (key == "algorithm") {
            if (value == "ssa")
                cfg.algorithm = AlgorithmKind::ssa;
            else if (value == "ctmc-parrep")
                cfg.algorithm = AlgorithmKind::ctmc_parrep;
            else if (value == "embedded-parrep")
                cfg.algorithm = AlgorithmKind::embedded_parrep;
            else
                throw ParseError(line_no, "unknown algorithm '" + std::string(value) +
                                              "' (ssa, ctmc-parrep, embedded-parrep)");
        } else if (key == "replicas") {
            cfg.replicas = whole(1);
        } else if (key == "t_c") {
            cfg.t_c = real(0);
        } else if (key == "t_p") {
            cfg.t_p = real(0);
        } else if (key == "n_c") {
            cfg.n_c = whole(1);
        } else if (key == "n_p") {
            cfg.n_p = whole(1);
        } else if (key == "dephasing") {
            if (value == "rejection")
                cfg.dephasing = DephasingKind::rejection;
            else if (value == "fleming-viot")
                cfg.dephasing = DephasingKind::fleming_viot;
            else
                throw ParseError(line_no, "unknown dephasing '" + std::string(value) + "' (rejection, fleming-viot)");
        } else if (key == "initial_state") {
            for (auto w : words(value)) {
                const auto v = to_unsigned(w);
                if (!v || *v > static_cast<std::uint64_t>(std::numeric_limits<Count>::max()))
                    throw ParseError(line_no, "initial_state entries must be non-negative integers");
                cfg.initial_state.push_back(static_cast<Count>(*v));
            }
        } else if (key.starts_with("observable.")) {
            named("observable.", cfg.observables);
        } else if (key.starts_with("slow.")) {
            named("slow.", cfg.slow_observables);
        } else if (key == "horizon_time") {
            cfg.horizon_time = real(0);
        } else if (key == "horizon_steps") {
            cfg.horizon_steps = whole(1);
        } else if (key == "master_seed") {
            cfg.master_seed = whole(0);
        } else if (key == "batches") {
            cfg.batches = whole(10);
        } else if (key == "output") {
            cfg.output = std::string(value);
        } else {
            throw ParseError(line_no, "unknown key '" + key + "'");
        }
    }

    auto missing = [](const std::string& field) { return ParseError(0, "missing required field '" + field + "'"); };
    if (cfg.network.empty()) throw missing("network");
    if (!seen.contains("algorithm")) throw missing("algorithm");
    if (cfg.initial_state.empty()) throw missing("initial_state");
    if (!cfg.horizon_time && !cfg.horizon_steps) throw missing("horizon_time or horizon_steps");
    switch (cfg.algorithm) {
        case AlgorithmKind::ssa:
            if (!cfg.horizon_time) throw missing("horizon_time");
            break;
        case AlgorithmKind::ctmc_parrep:
            if (!cfg.t_c) throw missing("t_c");
            if (!cfg.t_p) throw missing("t_p");
            if (!cfg.horizon_time) throw missing("horizon_time");
            if (cfg.dephasing != DephasingKind::rejection)
                throw ParseError(0, "ctmc-parrep supports rejection dephasing only");
            break;
        case AlgorithmKind::embedded_parrep:
            if (!cfg.n_c) throw missing("n_c");
            if (!cfg.n_p) throw missing("n_p");
            if (cfg.dephasing == DephasingKind::fleming_viot && cfg.replicas < 2)
                throw ParseError(0, "fleming-viot dephasing needs replicas >= 2");
            break;
    }
    if (cfg.algorithm != AlgorithmKind::ssa && cfg.slow_observables.empty()) throw missing("slow.<name>");
    return cfg;
}

std::string serialize_experiment(const ExperimentConfig& cfg) {
    std::string out;
    auto put = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    put("network", cfg.network);
    put("algorithm", to_string(cfg.algorithm));
    put("replicas", std::to_string(cfg.replicas));
    if (cfg.t_c) put("t_c", format_double(*cfg.t_c));
    if (cfg.t_p) put("t_p", format_double(*cfg.t_p));
    if (cfg.n_c) put("n_c", std::to_string(*cfg.n_c));
    if (cfg.n_p) put("n_p", std::to_string(*cfg.n_p));
    put("dephasing", to_string(cfg.dephasing));
    std::string x;
    for (auto c : cfg.initial_state) x += (x.empty() ? "" : " ") + std::to_string(c);
    put("initial_state", x);
    for (const auto& o : cfg.observables) put("observable." + o.name, format_observable(o.expr));
    for (const auto& o : cfg.slow_observables) put("slow." + o.name, format_observable(o.expr));
    if (cfg.horizon_time) put("horizon_time", format_double(*cfg.horizon_time));
    if (cfg.horizon_steps) put("horizon_steps", std::to_string(*cfg.horizon_steps));
    put("master_seed", std::to_string(cfg.master_seed));
    put("batches", std::to_string(cfg.batches));
    put("output", cfg.output);
    return out;
}

}  // namespace parrep
