#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pinflow/errors.hpp"

namespace pinflow {

enum class ComponentKind { MOSFET, RESISTOR, CAPACITOR, INDUCTOR, VSOURCE, ISOURCE };

const char* to_string(ComponentKind kind);

/// One circuit component with ordered pins. MOSFETs carry exactly
/// (drain, gate, source, body); all two-terminal kinds carry (plus, minus).
struct Component {
    std::string name;
    ComponentKind kind = ComponentKind::RESISTOR;
    std::vector<std::pair<std::string, std::string>> pins;  // (role, net)
    std::map<std::string, double> params;
    std::string model;           // MOSFET model card name, empty otherwise
    std::string symmetry_group;  // assigned from the schema, empty until then

    std::size_t pin_count() const { return pins.size(); }
};

struct Circuit {
    std::vector<Component> components;
    // net name -> attached (component name, pin role) pairs
    std::map<std::string, std::set<std::pair<std::string, std::string>>> nets;
    std::map<std::string, double> globals;
    std::string circuit_class;

    const Component* find_component(const std::string& name) const;
    Component* find_component(const std::string& name);
    std::size_t total_pin_count() const;
};

struct Diagnostic {
    enum class Level { Warn, Error };
    Level level = Level::Warn;
    std::string code;
    std::string message;
    long line = -1;

    std::string to_json() const;
};

/// Parse the supported SPICE subset. Lines starting with '*' are comments,
/// '+' continues the previous card. Card kinds by first letter
/// (case-insensitive): R/C/L/V/I two-terminal `Xname n1 n2 value`, MOSFET
/// `Mname nd ng ns nb model W=.. L=.. NF=..`. Directives: `.global k=v`,
/// `.class name`. Engineering suffixes f p n u m k meg g.
///
/// Throws ParseError with codes UnknownCard, ArityError, DuplicateName,
/// MalformedNumber, EmptyCircuit.
Circuit parse_netlist(const std::string& text);

/// Parse one numeric token with an optional engineering suffix.
/// "10u" -> 1e-5, "1meg" -> 1e6. Throws ParseError(MalformedNumber).
double parse_si_number(const std::string& token, long line = -1);

/// Structural checks that are not parse failures: dangling nets (warn),
/// orphan pins and duplicate net attachments (error). Returns diagnostics,
/// never throws.
std::vector<Diagnostic> validate(const Circuit& circuit);

/// Print a Circuit back to card text. parse_netlist(emit_netlist(c)) is
/// structurally identical to c.
std::string emit_netlist(const Circuit& circuit);

bool circuits_equal(const Circuit& a, const Circuit& b);

}  // namespace pinflow
