#include "mts/registry.hpp"

#include "mts/bilevel.hpp"
#include "mts/casestudies.hpp"
#include "mts/errors.hpp"

#include <charconv>
#include <cmath>

namespace mts {

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names{"r2", "tracking", "linear3", "cascade", "rlc", "bilevel-example"};
    return names;
}

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) out[k++] = x;
    return out;
}

}  // namespace

BuiltinStack builtin_stack(const std::string& name) {
    if (name == "r2") return {name, linear_stack(r2_config()), vec({1.0, 0.0}), vec({0.0, 0.0})};
    if (name == "tracking") return {name, linear_stack(tracking_config()), vec({1.0, 1.0}), vec({0.0, 0.0})};
    if (name == "linear3")
        return {name, linear_stack(linear3_config()), vec({1.0, 0.0, 0.0}), vec({0.0, 0.0, 0.0})};
    if (name == "cascade") {
        const CascadeParams p;
        return {name, cascade_stack(p), Vector::Zero(4), cascade_equilibrium(p)};
    }
    if (name == "rlc") {
        const RlcParams p;
        return {name, rlc_stack(p), Vector::Zero(8), rlc_equilibrium(p)};
    }
    if (name == "bilevel-example")
        return {name, as_system_stack(bilevel_example_problem()), vec({0.5, 0.5}), vec({0.0, 0.0})};
    std::string known;
    for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown builtin stack '" + name + "' (known: " + known + ")");
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) throw ConfigError("empty number list");
    std::size_t start = 0;
    while (true) {
        const auto end = text.find(',', start);
        const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        double v = 0.0;
        const auto* first = item.data();
        const auto* last = item.data() + item.size();
        const auto res = std::from_chars(first, last, v);
        if (item.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
            throw ConfigError("'" + item + "' is not a number in list '" + text + "'");
        out.push_back(v);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

Scheme parse_scheme(const std::string& text, const SystemStack& stack, const Vector& reference) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    const auto n = stack.size();
    auto no_arg = [&] {
        if (colon != std::string::npos) throw ConfigError("scheme '" + head + "' takes no parameters");
    };

    Scheme s;
    if (head == "plain") {
        no_arg();
        s = scheme::Plain{};
    } else if (head == "predsens") {
        no_arg();
        s = scheme::PredictiveSensitivity{};
    } else if (head == "singular") {
        auto eps = parse_real_list(arg);
        if (eps.size() == n - 1) eps.insert(eps.begin(), 1.0);
        if (eps.size() != n)
            throw ConfigError("singular needs " + std::to_string(n - 1) + " values (eps_2..eps_N), got " +
                              std::to_string(eps.size()));
        s = scheme::SingularPerturbation{eps};
    } else if (head == "precond") {
        const auto h = parse_real_list(arg);
        if (h.size() != n)
            throw ConfigError("precond needs " + std::to_string(n) + " gains, got " + std::to_string(h.size()));
        scheme::Preconditioned p;
        for (double v : h) p.gains.push_back(Matrix::Constant(1, 1, v));
        s = std::move(p);
    } else if (head == "approx") {
        if (arg == "frozen") {
            s = frozen_sensitivity(stack, reference);
        } else if (arg.rfind("noise:", 0) == 0) {
            const auto sigma = parse_real_list(arg.substr(6));
            if (sigma.size() != 1 || sigma[0] < 0.0) throw ConfigError("approx:noise needs one sigma >= 0");
            s = noisy_sensitivity(stack, sigma[0]);
        } else {
            throw ConfigError("approx needs 'frozen' or 'noise:<sigma>', got '" + arg + "'");
        }
    } else {
        throw ConfigError("unknown scheme '" + text + "' (plain | singular:<eps> | predsens | precond:<h> | "
                          "approx:<frozen|noise:sigma>)");
    }
    try {
        validate_scheme(stack, s);
    } catch (const ConfigError&) {
        throw;
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

}  // namespace mts
