#include "hybridsim/case.hpp"
#include "hybridsim/split.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hybridsim {

std::string to_string(FaultKind k) {
    switch (k) {
    case FaultKind::slg: return "SLG";
    case FaultKind::ll: return "LL";
    case FaultKind::llg: return "LLG";
    case FaultKind::three_phase: return "3phase";
    }
    return "?";
}

std::string to_string(SignalKind k) {
    switch (k) {
    case SignalKind::motor_stall: return "motor_stall";
    case SignalKind::motor_run: return "motor_run";
    case SignalKind::breaker: return "breaker";
    case SignalKind::generic_control: return "generic_control";
    }
    return "?";
}

SignalKind parse_signal_kind(const std::string& s) {
    if (s == "motor_stall") return SignalKind::motor_stall;
    if (s == "motor_run") return SignalKind::motor_run;
    if (s == "breaker") return SignalKind::breaker;
    if (s == "generic_control") return SignalKind::generic_control;
    throw std::invalid_argument("unknown signal kind '" + s + "'");
}

namespace {

using Fields = std::map<std::string, std::string>;

double to_double(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw std::invalid_argument("bad number for " + key + ": '" + s + "'");
    return v;
}

// Accepts "re", "imj", "re+imj" and "re-imj" (exponents allowed).
Complex to_complex(const std::string& key, const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty value for " + key);
    if (s.back() != 'j') return {to_double(key, s), 0.0};
    const std::string body = s.substr(0, s.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    if (split == std::string::npos) {
        if (body.empty() || body == "+" || body == "-")
            return {0.0, body == "-" ? -1.0 : 1.0};
        return {0.0, to_double(key, body)};
    }
    const std::string im = body.substr(split);
    const double imv = (im == "+" || im == "-") ? (im == "-" ? -1.0 : 1.0) : to_double(key, im);
    return {to_double(key, body.substr(0, split)), imv};
}

std::uint8_t to_phases(const std::string& key, const std::string& s) {
    std::uint8_t mask = 0;
    for (char c : s) {
        if (c < 'a' || c > 'c') throw std::invalid_argument("bad phase set for " + key + ": '" + s + "'");
        mask |= static_cast<std::uint8_t>(1u << (c - 'a'));
    }
    if (mask == 0) throw std::invalid_argument("empty phase set for " + key);
    return mask;
}

class Record {
public:
    explicit Record(Fields f) : f_(std::move(f)) {}

    bool has(const std::string& k) const { return f_.contains(k); }
    std::string str(const std::string& k) const {
        used_.insert(k);
        auto it = f_.find(k);
        if (it == f_.end()) throw std::invalid_argument("missing field '" + k + "'");
        return it->second;
    }
    std::string str(const std::string& k, const std::string& dflt) const { return has(k) ? str(k) : dflt; }
    double num(const std::string& k) const { return to_double(k, str(k)); }
    double num(const std::string& k, double dflt) const { return has(k) ? num(k) : dflt; }
    int integer(const std::string& k) const {
        const double v = num(k);
        if (v != std::floor(v)) throw std::invalid_argument("field '" + k + "' must be an integer");
        return static_cast<int>(v);
    }
    Complex cplx(const std::string& k, Complex dflt = {}) const { return has(k) ? to_complex(k, str(k)) : dflt; }
    bool flag(const std::string& k, bool dflt) const {
        if (!has(k)) return dflt;
        const auto s = str(k);
        if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
        if (s == "0" || s == "false" || s == "no" || s == "off") return false;
        throw std::invalid_argument("bad flag for " + k + ": '" + s + "'");
    }
    void check_all_used() const {
        for (const auto& [k, v] : f_)
            if (!used_.contains(k)) throw std::invalid_argument("unknown field '" + k + "'");
    }

private:
    Fields f_;
    mutable std::set<std::string> used_;
};

Fields parse_fields(const std::vector<std::string>& tokens, std::size_t from) {
    Fields f;
    for (std::size_t k = from; k < tokens.size(); ++k) {
        const auto eq = tokens[k].find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + tokens[k] + "'");
        const auto key = tokens[k].substr(0, eq);
        if (f.contains(key)) throw std::invalid_argument("duplicate field '" + key + "'");
        f[key] = tokens[k].substr(eq + 1);
    }
    return f;
}

net::BusKind to_bus_kind(const std::string& s) {
    if (s == "load") return net::BusKind::load;
    if (s == "generator") return net::BusKind::generator;
    if (s == "boundary") return net::BusKind::boundary;
    if (s == "dummy") return net::BusKind::dummy;
    throw std::invalid_argument("unknown bus kind '" + s + "'");
}

net::ZeroSequence to_zero(const std::string& s) {
    if (s == "through") return net::ZeroSequence::through;
    if (s == "open") return net::ZeroSequence::open;
    if (s == "ground_from") return net::ZeroSequence::ground_from;
    if (s == "ground_to") return net::ZeroSequence::ground_to;
    throw std::invalid_argument("unknown zero-sequence connection '" + s + "'");
}

FaultKind to_fault_kind(const std::string& s) {
    if (s == "SLG" || s == "slg") return FaultKind::slg;
    if (s == "LL" || s == "ll") return FaultKind::ll;
    if (s == "LLG" || s == "llg") return FaultKind::llg;
    if (s == "3phase" || s == "three_phase") return FaultKind::three_phase;
    throw std::invalid_argument("unknown fault kind '" + s + "'");
}

void parse_bus(CaseData& c, const Record& r) {
    net::Bus b;
    b.id = r.integer("id");
    b.base_kv = r.num("kv");
    b.kind = to_bus_kind(r.str("kind", "load"));
    b.area = r.str("area", net::kExternalArea);
    if (b.area != net::kDetailedArea && b.area != net::kExternalArea)
        throw std::invalid_argument("area must be 'detailed' or 'external'");
    b.shunt1 = r.cplx("shunt1", r.cplx("shunt"));
    b.shunt0 = r.cplx("shunt0", r.cplx("shunt"));
    if (r.has("shunt")) r.str("shunt");
    c.net.add_bus(b);
}

void parse_branch(CaseData& c, const std::string& kw, const Record& r) {
    net::Branch br;
    br.id = r.str("id");
    br.from = r.integer("from");
    br.to = r.integer("to");
    br.z1 = r.cplx("z1");
    br.z2 = r.cplx("z2", br.z1);
    br.z0 = r.cplx("z0", br.z1);
    br.b1 = r.num("b1", 0.0);
    br.b0 = r.num("b0", br.b1);
    br.tap = r.num("tap", 1.0);
    br.shift_deg = r.num("shift", 0.0);
    br.is_transformer = kw == "xfmr";
    br.zero = to_zero(r.str("zero", "through"));
    const auto st = r.str("status", "closed");
    if (st != "closed" && st != "open") throw std::invalid_argument("status must be closed or open");
    br.status = st == "closed" ? net::BranchStatus::closed : net::BranchStatus::open;
    c.net.add_branch(br);
}

void parse_machine(CaseData& c, const Record& r) {
    net::MachineData m;
    m.id = r.str("id");
    m.bus = r.integer("bus");
    m.slack = r.flag("slack", false);
    m.p_set = r.num("p", 0.0);
    m.v_set = r.num("v", 1.0);
    m.h = r.num("h");
    m.d = r.num("d", 0.0);
    m.ra = r.num("ra", 0.0);
    m.xd = r.num("xd");
    m.xdp = r.num("xdp");
    m.xq = r.num("xq");
    m.xqp = r.num("xqp");
    m.td0p = r.num("td0p");
    m.tq0p = r.num("tq0p", 0.0);
    m.x2 = r.num("x2", 0.5 * (m.xdp + m.xqp));
    m.ka = r.num("ka", 20.0);
    m.ta = r.num("ta", 0.2);
    m.efd_min = r.num("efd_min", -10.0);
    m.efd_max = r.num("efd_max", 10.0);
    c.net.add_machine(m);
}

void parse_load(CaseData& c, const Record& r) {
    net::LoadData l;
    l.id = r.str("id");
    l.bus = r.integer("bus");
    l.p = r.num("p", 0.0);
    l.q = r.num("q", 0.0);
    l.phases = to_phases("phases", r.str("phases", "abc"));
    c.net.add_load(l);
}

void parse_motor(CaseData& c, const Record& r) {
    net::MotorData m;
    m.id = r.str("id");
    m.emt_id = r.str("emt_id", m.id);
    m.bus = r.integer("bus");
    const auto ph = to_phases("phase", r.str("phase"));
    if (ph != 1 && ph != 2 && ph != 4) throw std::invalid_argument("motor must sit on exactly one phase");
    m.phase = static_cast<net::Phase>(ph == 1 ? 0 : (ph == 2 ? 1 : 2));
    m.p0 = r.num("p0");
    m.spim.rs = r.num("rs", m.spim.rs);
    m.spim.xls = r.num("xls", m.spim.xls);
    m.spim.xm = r.num("xm", m.spim.xm);
    m.spim.rr = r.num("rr", m.spim.rr);
    m.spim.xlr = r.num("xlr", m.spim.xlr);
    m.spim.h = r.num("h", m.spim.h);
    m.spim.rated_speed = r.num("rated_speed", m.spim.rated_speed);
    m.spim.const_torque = r.num("const_torque", m.spim.const_torque);
    m.spim.stall_speed = r.num("stall_speed", m.spim.stall_speed);
    m.v_stall = r.num("v_stall", m.v_stall);
    m.t_stall = r.num("t_stall", m.t_stall);
    m.v_zlow = r.num("v_zlow", m.v_zlow);
    if (!(m.p0 > 0.0)) throw std::invalid_argument("motor p0 must be positive");
    c.net.add_motor(m);
}

void parse_event(CaseData& c, const std::string& kw, const Record& r) {
    if (kw == "fault") {
        FaultSpec f;
        f.id = r.str("id", "F" + std::to_string(c.faults.size() + 1));
        f.bus = r.integer("bus");
        f.kind = to_fault_kind(r.str("kind"));
        f.phases = to_phases("phases", r.str("phases", "abc"));
        f.r_fault = r.num("r", 0.0);
        f.t_on = r.num("t_on");
        f.t_off = r.num("t_off");
        if (!(f.t_off > f.t_on)) throw std::invalid_argument("fault t_off must exceed t_on");
        if (f.r_fault < 0.0) throw std::invalid_argument("fault resistance must be non-negative");
        const int n = std::popcount(f.phases);
        if ((f.kind == FaultKind::slg && n != 1) || ((f.kind == FaultKind::ll || f.kind == FaultKind::llg) && n != 2) ||
            (f.kind == FaultKind::three_phase && n != 3))
            throw std::invalid_argument("phase set does not match fault kind");
        c.faults.push_back(f);
    } else if (kw == "signal") {
        EventSignal s;
        s.t_emt = r.num("t");
        s.kind = parse_signal_kind(r.str("kind"));
        s.target = r.str("target");
        s.value = r.num("value", 0.0);
        c.scripted.push_back(s);
    } else {
        throw std::invalid_argument("unknown event keyword '" + kw + "'");
    }
}

void parse_config(CaseData& c, const Record& r) {
    RunConfig& k = c.config;
    k.t_end = r.num("t_end", k.t_end);
    k.dt_ts = r.num("dt_ts", k.dt_ts);
    k.dt_emt = r.num("dt_emt", k.dt_emt);
    k.t_hybrid_start = r.num("t_hybrid_start", k.t_hybrid_start);
    k.switching = r.flag("switching", k.switching);
    k.reconcile = r.flag("reconcile", k.reconcile);
    k.sw.t_delay = r.num("t_delay", k.sw.t_delay);
    k.sw.eps_rate = r.num("eps_rate", k.sw.eps_rate);
    k.sw.eps_dv = r.num("eps_dv", k.sw.eps_dv);
    k.sw.hold_cycles = r.num("hold_cycles", k.sw.hold_cycles);
    k.warmup = r.num("warmup", k.warmup);
    k.warmup_tol = r.num("warmup_tol", k.warmup_tol);
    k.ts_tol = r.num("ts_tol", k.ts_tol);
    k.ts_max_iter = r.has("ts_max_iter") ? r.integer("ts_max_iter") : k.ts_max_iter;
    if (r.has("name")) c.name = r.str("name");
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    // Allow "key = value" spacing by gluing stray '=' tokens.
    std::vector<std::string> glued;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k + 2 < out.size() && out[k + 1] == "=") {
            glued.push_back(out[k] + "=" + out[k + 2]);
            k += 2;
        } else {
            glued.push_back(out[k]);
        }
    }
    return glued;
}

} // namespace

CaseData parse_case(std::istream& in, const std::string& name) {
    CaseData c;
    c.name = name;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        if (tokens[0].front() == '[') {
            if (tokens.size() != 1 || tokens[0].back() != ']') throw ParseError(lineno, "malformed section header");
            section = tokens[0].substr(1, tokens[0].size() - 2);
            static const std::set<std::string> known = {"buses", "branches", "machines", "loads",
                                                        "motors", "boundary", "events", "config"};
            if (!known.contains(section)) throw ParseError(lineno, "unknown section [" + section + "]");
            continue;
        }
        try {
            if (section.empty()) throw std::invalid_argument("content before the first section");
            if (section == "config") {
                Record r(parse_fields(tokens, 0));
                parse_config(c, r);
                r.check_all_used();
                continue;
            }
            if (section == "boundary") {
                if (tokens[0] == "bus" && tokens.size() == 2) {
                    c.boundary.push_back(static_cast<net::BusId>(to_double("bus", tokens[1])));
                } else if (tokens[0] == "map" && tokens.size() == 3) {
                    if (c.emt_map.contains(tokens[1])) throw std::invalid_argument("duplicate map for " + tokens[1]);
                    c.emt_map[tokens[1]] = tokens[2];
                } else {
                    throw std::invalid_argument("expected 'bus <id>' or 'map <emt_id> <phasor_id>'");
                }
                continue;
            }
            const std::string& kw = tokens[0];
            Record r(parse_fields(tokens, 1));
            if (section == "buses" && kw == "bus") parse_bus(c, r);
            else if (section == "branches" && (kw == "line" || kw == "xfmr")) parse_branch(c, kw, r);
            else if (section == "machines" && kw == "machine") parse_machine(c, r);
            else if (section == "loads" && kw == "load") parse_load(c, r);
            else if (section == "motors" && kw == "motor") parse_motor(c, r);
            else if (section == "events") parse_event(c, kw, r);
            else throw std::invalid_argument("unexpected '" + kw + "' in [" + section + "]");
            r.check_all_used();
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return c;
}

CaseData load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case file " + path);
    auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
    return parse_case(in, stem);
}

std::vector<std::string> validate_case(const CaseData& c) {
    std::vector<std::string> out;
    const auto& net = c.net;
    if (net.size() == 0) out.push_back("case has no buses");
    if (c.boundary.empty()) out.push_back("no boundary bus declared");
    for (auto b : c.boundary)
        if (!net.has_bus(b)) out.push_back("boundary bus " + std::to_string(b) + " does not exist");

    if (!c.boundary.empty() && out.empty()) {
        try {
            (void)net::split_network(net, c.boundary);
        } catch (const std::exception& e) {
            out.push_back(std::string("split: ") + e.what());
        }
    }

    for (const auto& m : net.motors()) {
        if (!net.has_bus(m.bus) || net.bus(m.bus).area != net::kDetailedArea) continue;
        auto it = c.emt_map.find(m.emt_id);
        if (it == c.emt_map.end()) out.push_back("mapping gap: EMT motor '" + m.emt_id + "' has no map entry");
        else if (it->second != m.id)
            out.push_back("mapping gap: '" + m.emt_id + "' maps to '" + it->second + "', expected '" + m.id + "'");
    }
    for (const auto& [emt, ph] : c.emt_map)
        if (!net.find_motor(ph)) out.push_back("mapping gap: map target '" + ph + "' is not a phasor motor");
    for (const auto& s : c.scripted)
        if (!c.emt_map.contains(s.target)) out.push_back("mapping gap: signal target '" + s.target + "' is unmapped");

    const RunConfig& k = c.config;
    if (!(k.dt_ts > 0.0 && k.dt_emt > 0.0)) out.push_back("time steps must be positive");
    else {
        const double ratio = k.dt_ts / k.dt_emt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) out.push_back("dt_ts is not an integer multiple of dt_emt");
    }
    if (!(k.t_end > 0.0)) out.push_back("t_end must be positive");
    if (!(k.sw.t_delay > 0.0 && k.sw.eps_rate > 0.0 && k.sw.eps_dv > 0.0 && k.sw.hold_cycles >= 1.0))
        out.push_back("switch controller settings must be positive with hold_cycles >= 1");
    if (k.t_hybrid_start - k.warmup < -1e-12) out.push_back("t_hybrid_start leaves no room for the EMT warm-up");
    for (const auto& f : c.faults) {
        if (!net.has_bus(f.bus)) {
            out.push_back("fault " + f.id + " at unknown bus " + std::to_string(f.bus));
            continue;
        }
        if (!(f.t_on > k.t_hybrid_start)) out.push_back("fault " + f.id + " starts before t_hybrid_start");
        if (net.bus(f.bus).area != net::kDetailedArea)
            out.push_back("fault " + f.id + " is in the external system (unsupported in hybrid mode)");
    }
    return out;
}

Eigen::Matrix3d fault_conductance(const FaultSpec& f, double base_kv) {
    const double r = std::max(ohms_to_pu(f.r_fault, base_kv), kMinFaultR);
    const double g = 1.0 / r;
    Eigen::Matrix3d y = Eigen::Matrix3d::Zero();
    std::vector<int> ph;
    for (int k = 0; k < 3; ++k)
        if (f.phases & (1u << k)) ph.push_back(k);
    switch (f.kind) {
    case FaultKind::slg:
    case FaultKind::three_phase:
        for (int k : ph) y(k, k) = g;
        break;
    case FaultKind::ll:
        y(ph[0], ph[0]) = y(ph[1], ph[1]) = g;
        y(ph[0], ph[1]) = y(ph[1], ph[0]) = -g;
        break;
    case FaultKind::llg: {
        // Both phases tied through a near-zero link to a point grounded via r.
        const double gs = 1.0 / kMinFaultR;
        const double c = gs * gs / (2.0 * gs + g);
        for (int a : ph)
            for (int b : ph) y(a, b) = (a == b ? gs : 0.0) - c;
        break;
    }
    }
    return y;
}

} // namespace hybridsim
