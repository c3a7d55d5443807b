#include "pinflow/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace pinflow {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

// Physical card = logical line with '+' continuations folded in.
struct Card {
    std::string text;
    long line;  // 1-based line of the first physical line
};

std::vector<Card> fold_cards(const std::string& text) {
    std::vector<Card> cards;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '*') continue;
        if (line[first] == '+') {
            if (cards.empty())
                throw ParseError("UnknownCard", "continuation line with no preceding card", lineno);
            cards.back().text += " " + line.substr(first + 1);
            continue;
        }
        cards.push_back({line.substr(first), lineno});
    }
    return cards;
}

const std::map<std::string, double>& suffix_table() {
    static const std::map<std::string, double> table = {
        {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6},
        {"m", 1e-3},  {"k", 1e3},   {"meg", 1e6}, {"g", 1e9},
    };
    return table;
}

double named_param(const std::vector<std::string>& tokens, std::size_t start,
                   const std::string& key, long line, bool required,
                   double fallback = std::nan("")) {
    for (std::size_t i = start; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos)
            throw ParseError("MalformedNumber", "expected key=value, got '" + tokens[i] + "'", line);
        if (lower(tokens[i].substr(0, eq)) == lower(key))
            return parse_si_number(tokens[i].substr(eq + 1), line);
    }
    if (required)
        throw ParseError("ArityError", "missing required parameter " + key, line);
    return fallback;
}

void check_finite_positive(const Component& c, const std::string& key, long line) {
    auto it = c.params.find(key);
    if (it == c.params.end()) return;
    if (!std::isfinite(it->second))
        throw ParseError("MalformedNumber", c.name + ": " + key + " is not finite", line);
    if (it->second <= 0.0)
        throw ParseError("MalformedNumber", c.name + ": " + key + " must be > 0", line);
}

}  // namespace

const char* to_string(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::MOSFET: return "MOSFET";
        case ComponentKind::RESISTOR: return "RESISTOR";
        case ComponentKind::CAPACITOR: return "CAPACITOR";
        case ComponentKind::INDUCTOR: return "INDUCTOR";
        case ComponentKind::VSOURCE: return "VSOURCE";
        case ComponentKind::ISOURCE: return "ISOURCE";
    }
    return "?";
}

const Component* Circuit::find_component(const std::string& name) const {
    for (const auto& c : components)
        if (c.name == name) return &c;
    return nullptr;
}

Component* Circuit::find_component(const std::string& name) {
    for (auto& c : components)
        if (c.name == name) return &c;
    return nullptr;
}

std::size_t Circuit::total_pin_count() const {
    std::size_t n = 0;
    for (const auto& c : components) n += c.pin_count();
    return n;
}

double parse_si_number(const std::string& token, long line) {
    if (token.empty())
        throw ParseError("MalformedNumber", "empty numeric token", line);
    const char* begin = token.c_str();
    char* end = nullptr;
    errno = 0;
    const double base = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE)
        throw ParseError("MalformedNumber", "cannot parse number '" + token + "'", line);
    std::string suffix = lower(std::string(end));
    if (suffix.empty()) {
        if (!std::isfinite(base))
            throw ParseError("MalformedNumber", "non-finite number '" + token + "'", line);
        return base;
    }
    const auto& table = suffix_table();
    auto it = table.find(suffix);
    if (it == table.end())
        throw ParseError("MalformedNumber", "unknown suffix '" + suffix + "' in '" + token + "'", line);
    return base * it->second;
}

Circuit parse_netlist(const std::string& text) {
    Circuit circuit;
    std::set<std::string> names;

    for (const Card& card : fold_cards(text)) {
        const auto tokens = split_ws(card.text);
        if (tokens.empty()) continue;
        const std::string head = tokens[0];

        if (head[0] == '.') {
            const std::string directive = lower(head);
            if (directive == ".global") {
                if (tokens.size() != 2)
                    throw ParseError("ArityError", ".global expects one key=value", card.line);
                const auto eq = tokens[1].find('=');
                if (eq == std::string::npos)
                    throw ParseError("MalformedNumber", ".global expects key=value", card.line);
                circuit.globals[tokens[1].substr(0, eq)] =
                    parse_si_number(tokens[1].substr(eq + 1), card.line);
            } else if (directive == ".class") {
                if (tokens.size() != 2)
                    throw ParseError("ArityError", ".class expects one identifier", card.line);
                circuit.circuit_class = tokens[1];
            } else {
                throw ParseError("UnknownCard", "unknown directive " + head, card.line);
            }
            continue;
        }

        Component comp;
        comp.name = head;
        const char kind_letter = static_cast<char>(std::tolower(static_cast<unsigned char>(head[0])));
        switch (kind_letter) {
            case 'r': comp.kind = ComponentKind::RESISTOR; break;
            case 'c': comp.kind = ComponentKind::CAPACITOR; break;
            case 'l': comp.kind = ComponentKind::INDUCTOR; break;
            case 'v': comp.kind = ComponentKind::VSOURCE; break;
            case 'i': comp.kind = ComponentKind::ISOURCE; break;
            case 'm': comp.kind = ComponentKind::MOSFET; break;
            default:
                throw ParseError("UnknownCard", "unrecognized card '" + head + "'", card.line);
        }
        if (names.count(comp.name))
            throw ParseError("DuplicateName", "component " + comp.name + " already defined", card.line);
        names.insert(comp.name);

        if (comp.kind == ComponentKind::MOSFET) {
            // Mname nd ng ns nb model W=.. L=.. [NF=..]
            if (tokens.size() < 6)
                throw ParseError("ArityError", comp.name + ": MOSFET needs 4 nets and a model", card.line);
            comp.pins = {{"drain", tokens[1]}, {"gate", tokens[2]},
                         {"source", tokens[3]}, {"body", tokens[4]}};
            comp.model = tokens[5];
            comp.params["W"] = named_param(tokens, 6, "W", card.line, true);
            comp.params["L"] = named_param(tokens, 6, "L", card.line, true);
            const double nf = named_param(tokens, 6, "NF", card.line, false, 1.0);
            comp.params["NF"] = nf;
            check_finite_positive(comp, "W", card.line);
            check_finite_positive(comp, "L", card.line);
            check_finite_positive(comp, "NF", card.line);
        } else {
            if (tokens.size() != 4)
                throw ParseError("ArityError",
                                 comp.name + ": expected 2 nets and a value, got " +
                                     std::to_string(tokens.size() - 1) + " fields",
                                 card.line);
            comp.pins = {{"plus", tokens[1]}, {"minus", tokens[2]}};
            comp.params["value"] = parse_si_number(tokens[3], card.line);
            if (!std::isfinite(comp.params["value"]))
                throw ParseError("MalformedNumber", comp.name + ": non-finite value", card.line);
            const bool positive_required = comp.kind == ComponentKind::RESISTOR ||
                                           comp.kind == ComponentKind::CAPACITOR ||
                                           comp.kind == ComponentKind::INDUCTOR;
            if (positive_required && comp.params["value"] <= 0.0)
                throw ParseError("MalformedNumber", comp.name + ": value must be > 0", card.line);
        }

        for (const auto& [role, net] : comp.pins)
            circuit.nets[net].insert({comp.name, role});
        circuit.components.push_back(std::move(comp));
    }

    if (circuit.components.empty())
        throw ParseError("EmptyCircuit", "no component cards");
    return circuit;
}

std::vector<Diagnostic> validate(const Circuit& circuit) {
    std::vector<Diagnostic> diags;

    for (const auto& [net, pins] : circuit.nets) {
        if (pins.size() == 1)
            diags.push_back({Diagnostic::Level::Warn, "DanglingNet",
                             "net " + net + " has a single attached pin", -1});
        if (pins.empty())
            diags.push_back({Diagnostic::Level::Error, "EmptyNet",
                             "net " + net + " has no attached pins", -1});
    }

    // Every pin must appear in exactly one net.
    for (const auto& comp : circuit.components) {
        for (const auto& [role, net] : comp.pins) {
            std::size_t hits = 0;
            for (const auto& [name, pins] : circuit.nets)
                hits += pins.count({comp.name, role});
            if (hits == 0)
                diags.push_back({Diagnostic::Level::Error, "OrphanPin",
                                 comp.name + "." + role + " belongs to no net", -1});
            else if (hits > 1)
                diags.push_back({Diagnostic::Level::Error, "DuplicateNetEntry",
                                 comp.name + "." + role + " appears in " +
                                     std::to_string(hits) + " nets", -1});
        }
    }
    return diags;
}

std::string Diagnostic::to_json() const {
    std::ostringstream out;
    out << R"({"level":")" << (level == Level::Warn ? "warn" : "error")
        << R"(","code":")" << code << R"(","message":")" << message << R"(","line":)" << line
        << "}";
    return out.str();
}

std::string emit_netlist(const Circuit& circuit) {
    std::ostringstream out;
    out.precision(17);
    if (!circuit.circuit_class.empty()) out << ".class " << circuit.circuit_class << "\n";
    for (const auto& [key, value] : circuit.globals) out << ".global " << key << "=" << value << "\n";
    for (const auto& comp : circuit.components) {
        out << comp.name;
        for (const auto& [role, net] : comp.pins) out << " " << net;
        if (comp.kind == ComponentKind::MOSFET) {
            out << " " << comp.model << " W=" << comp.params.at("W") << " L=" << comp.params.at("L")
                << " NF=" << comp.params.at("NF");
        } else {
            out << " " << comp.params.at("value");
        }
        out << "\n";
    }
    return out.str();
}

bool circuits_equal(const Circuit& a, const Circuit& b) {
    if (a.circuit_class != b.circuit_class) return false;
    if (a.globals != b.globals) return false;
    if (a.nets != b.nets) return false;
    if (a.components.size() != b.components.size()) return false;
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        const auto& x = a.components[i];
        const auto& y = b.components[i];
        if (x.name != y.name || x.kind != y.kind || x.pins != y.pins || x.params != y.params ||
            x.model != y.model)
            return false;
    }
    return true;
}

}  // namespace pinflow
