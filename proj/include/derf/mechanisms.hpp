#pragma once

#include <optional>
#include <variant>

#include "derf/params.hpp"
#include "derf/qmc.hpp"

namespace derf {

struct TrigFamily {};
struct PosFamily {};

using FamilyParams = std::variant<TrigFamily, PosFamily, GEParams, SADEParams, DEParams>;

/// One random-feature family plus its draw scheme.
struct Mechanism {
    FamilyParams family;
    Scheme scheme = Scheme::Iid;
    std::optional<QmcCorrelation> qmc; // present iff scheme == Qmc

    bool is_trig() const { return std::holds_alternative<TrigFamily>(family); }
    bool positive() const { return !is_trig(); }

    /// Data dimension encoded by the parameters; -1 for trig/pos (any d).
    Index dim() const {
        if (const auto* g = std::get_if<GEParams>(&family)) return g->d_dim;
        if (const auto* s = std::get_if<SADEParams>(&family)) return s->ge.d_dim;
        if (const auto* d = std::get_if<DEParams>(&family)) return d->dim();
        return -1;
    }

    static Mechanism trig(Scheme s = Scheme::Iid) { return checked({TrigFamily{}, s, {}}); }
    static Mechanism pos(Scheme s = Scheme::Iid) { return checked({PosFamily{}, s, {}}); }
    static Mechanism ge(GEParams p, Scheme s = Scheme::Iid) {
        return checked({std::move(p), s, {}});
    }
    static Mechanism sade(SADEParams p, Scheme s = Scheme::Iid) {
        return checked({std::move(p), s, {}});
    }
    static Mechanism de(DEParams p, Scheme s = Scheme::Iid) {
        return checked({std::move(p), s, {}});
    }

    static Mechanism with_qmc(FamilyParams family, QmcCorrelation corr) {
        Mechanism m{std::move(family), Scheme::Qmc, std::move(corr)};
        return checked(std::move(m));
    }

private:
    static Mechanism checked(Mechanism m) {
        if (m.scheme == Scheme::Qmc) {
            if (m.is_trig())
                throw InvalidCorrelation("qmc draws are restricted to positive families");
            if (!m.qmc) throw ConfigError("qmc scheme requires a correlation");
            if (!validate_qmc(m.qmc->psi_qmc, m.qmc->m).valid)
                throw InvalidCorrelation("qmc correlation out of the admissible range");
            if (m.dim() >= 0 && m.qmc->psi_qmc.size() != m.dim())
                throw DimensionMismatch("qmc correlation length must match parameter dim");
        } else if (m.qmc) {
            throw ConfigError("correlation given but scheme is not qmc");
        }
        return m;
    }
};

} // namespace derf
