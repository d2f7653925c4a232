#pragma once

/*
 * Synthetic crash populations with generation-time ground truth, a naive
 * full-scan tally used as an oracle, and Monte Carlo power simulation.
 *
 * Population spec (key = value):
 *
 *   seed = 42
 *   n_crashes = 500
 *   year = 2022
 *   region.kind = national | county      region.name, region.state
 *   source = synthetic                   (default; weighted specs default
 *                                         to synthetic-sample)
 *   multiplicity = 1:0.6, 2:0.3, 3:0.1   vehicles per crash
 *   multiplicity.sequence = 2, 1         fixed per-crash counts (overrides
 *                                         n_crashes and multiplicity)
 *   severity = O:0.7, C:0.15, B:0.1, A:0.04, K:0.01
 *   body = passenger:0.85, vehicle_nfs:0.05, other_vehicle:0.07, non_vehicle:0.03
 *   road = surface_street:0.7, excluded_highway:0.25, unknown:0.05
 *   in_transport_probability = 0.95
 *   tow_probability = 0.2                per unit
 *   airbag_probability = 0.1             per unit
 *   weight.kind = constant | uniform_int | uniform_real
 *   weight.value, weight.min, weight.max
 *   vmt_millions = 0.012                 optional exposure for rate checks
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "crashbench/filters.hpp"
#include "crashbench/kvfile.hpp"
#include "crashbench/model.hpp"
#include "crashbench/power.hpp"

namespace crashbench
{
/*!
 * SplitMix64 (Steele, Lea, Flood 2014). Usable as a standard uniform random
 * bit generator.
 */
class SplitMix64
{
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    //! Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    //! Integer in [lo, hi] by rejection-free multiply-shift on 53 bits.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        auto span = static_cast<double>(hi - lo + 1);
        auto k = static_cast<std::int64_t>(std::floor(uniform() * span));
        return lo + std::min<std::int64_t>(k, hi - lo);
    }

    //! Independent stream for index \p i of a seed family.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t i)
    {
        SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (i + 1)));
        return g();
    }

  private:
    std::uint64_t state_;
};

//! Discrete distribution over labelled outcomes; parsed from "a:0.5, b:0.5".
template<class T>
struct Mixture
{
    std::vector<std::pair<T, double>> outcomes;

    void validate(std::string const& what) const
    {
        if (outcomes.empty())
            throw ValidationError(what + " mixture is empty");
        double sum = 0;
        for (auto const& [v, p] : outcomes)
        {
            if (!(p >= 0))
                throw ValidationError(what + " mixture has a negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError(what + " mixture sums to " + format_double(sum)
                                  + ", not 1");
    }

    T sample(SplitMix64& rng) const
    {
        double u = rng.uniform();
        double acc = 0;
        for (auto const& [v, p] : outcomes)
        {
            acc += p;
            if (u < acc)
                return v;
        }
        // Rounding slack: last outcome with nonzero probability.
        for (auto it = outcomes.rbegin(); it != outcomes.rend(); ++it)
        {
            if (it->second > 0)
                return it->first;
        }
        return outcomes.back().first;
    }

    template<class Parse>
    static Mixture parse(std::string const& text, Parse parse_value, std::string const& what)
    {
        Mixture m;
        for (auto const& item : split_trimmed(text, ','))
        {
            auto colon = item.rfind(':');
            if (colon == std::string::npos)
                throw SchemaError(what + " entry '" + item + "' is not value:probability");
            auto p = parse_number(item.substr(colon + 1));
            if (!p)
                throw SchemaError(what + " entry '" + item + "' has a malformed probability");
            m.outcomes.emplace_back(parse_value(std::string(trim(item.substr(0, colon)))), *p);
        }
        m.validate(what);
        return m;
    }
};

enum class WeightKind
{
    Constant,
    UniformInt,
    UniformReal
};

struct PopulationSpec
{
    std::uint64_t seed = 1;
    std::size_t n_crashes = 100;
    int year = 2022;
    Region region;
    std::string source;
    Mixture<int> multiplicity{{{1, 1.0}}};
    std::vector<int> multiplicity_sequence;
    Mixture<Kabco> severity{{{Kabco::O, 0.75},
                             {Kabco::C, 0.12},
                             {Kabco::B, 0.08},
                             {Kabco::A, 0.04},
                             {Kabco::K, 0.01}}};
    Mixture<BodyClass> body{{{BodyClass::Passenger, 0.85},
                             {BodyClass::VehicleNFS, 0.05},
                             {BodyClass::OtherVehicle, 0.07},
                             {BodyClass::NonVehicle, 0.03}}};
    Mixture<RoadClass> road{{{RoadClass::SurfaceStreet, 0.7},
                             {RoadClass::ExcludedHighway, 0.25},
                             {RoadClass::Unknown, 0.05}}};
    double in_transport_probability = 0.95;
    double tow_probability = 0.2;
    double airbag_probability = 0.1;
    WeightKind weight_kind = WeightKind::Constant;
    double weight_value = 1.0;
    double weight_min = 1.0;
    double weight_max = 1.0;
    std::optional<double> vmt_millions;

    bool weighted() const
    {
        return !(weight_kind == WeightKind::Constant && weight_value == 1.0);
    }

    std::string effective_source() const
    {
        if (!source.empty())
            return source;
        return weighted() ? "synthetic-sample" : "synthetic";
    }

    std::size_t crash_count() const
    {
        return multiplicity_sequence.empty() ? n_crashes : multiplicity_sequence.size();
    }

    void validate() const
    {
        multiplicity.validate("multiplicity");
        for (auto const& [m, p] : multiplicity.outcomes)
        {
            if (m < 1 && p > 0)
                throw ValidationError("multiplicity support must be >= 1");
        }
        for (int m : multiplicity_sequence)
        {
            if (m < 1)
                throw ValidationError("multiplicity.sequence entries must be >= 1");
        }
        severity.validate("severity");
        body.validate("body");
        road.validate("road");
        for (double p : {in_transport_probability, tow_probability, airbag_probability})
        {
            if (!(p >= 0 && p <= 1))
                throw ValidationError("probability outside [0, 1]");
        }
        switch (weight_kind)
        {
            case WeightKind::Constant:
                if (!(weight_value > 0))
                    throw ValidationError("weight.value must be positive");
                break;
            case WeightKind::UniformInt:
            case WeightKind::UniformReal:
                if (!(weight_min > 0 && weight_max >= weight_min))
                    throw ValidationError("weight range must be positive and ordered");
                break;
        }
        if (vmt_millions && !(*vmt_millions > 0))
            throw ValidationError("vmt_millions must be positive");
        region.validate();
    }

    static PopulationSpec from_kv(KeyValueFile const& kv)
    {
        PopulationSpec s;
        s.seed = static_cast<std::uint64_t>(kv.number_or("seed", 1));
        s.n_crashes = static_cast<std::size_t>(kv.number_or("n_crashes", 100));
        s.year = static_cast<int>(kv.number_or("year", 2022));
        if (kv.get_or("region.kind", "national") == "county")
            s.region = Region::county(kv.require("region.name"), kv.require("region.state"));
        s.source = kv.get_or("source", "");
        auto parse_int = [](std::string const& v) {
            auto n = parse_integer(v);
            if (!n)
                throw SchemaError("malformed integer '" + v + "'");
            return static_cast<int>(*n);
        };
        if (auto m = kv.get("multiplicity"))
            s.multiplicity = Mixture<int>::parse(*m, parse_int, "multiplicity");
        if (auto seq = kv.get("multiplicity.sequence"))
        {
            for (auto const& v : split_trimmed(*seq, ','))
                s.multiplicity_sequence.push_back(parse_int(v));
        }
        if (auto m = kv.get("severity"))
        {
            s.severity = Mixture<Kabco>::parse(
                *m, [](std::string const& v) { return parse_kabco(v); }, "severity");
        }
        if (auto m = kv.get("body"))
        {
            s.body = Mixture<BodyClass>::parse(
                *m, [](std::string const& v) { return parse_body_class(v); }, "body");
        }
        if (auto m = kv.get("road"))
        {
            s.road = Mixture<RoadClass>::parse(
                *m, [](std::string const& v) { return parse_road_class(v); }, "road");
        }
        s.in_transport_probability = kv.number_or("in_transport_probability", 0.95);
        s.tow_probability = kv.number_or("tow_probability", 0.2);
        s.airbag_probability = kv.number_or("airbag_probability", 0.1);
        auto kind = kv.get_or("weight.kind", "constant");
        if (kind == "constant")
            s.weight_kind = WeightKind::Constant;
        else if (kind == "uniform_int")
            s.weight_kind = WeightKind::UniformInt;
        else if (kind == "uniform_real")
            s.weight_kind = WeightKind::UniformReal;
        else
            throw SchemaError("unknown weight.kind '" + kind + "'");
        s.weight_value = kv.number_or("weight.value", 1.0);
        s.weight_min = kv.number_or("weight.min", 1.0);
        s.weight_max = kv.number_or("weight.max", s.weight_min);
        if (kv.has("vmt_millions"))
            s.vmt_millions = kv.require_number("vmt_millions");
        s.validate();
        return s;
    }
};

/*!
 * Counts recorded while generating, for the default comparable subset
 * (surface streets, in transport, passenger and NFS vehicles).
 */
struct GroundTruth
{
    double crashes = 0;
    double vehicles = 0;
    std::map<BodyClass, double> vehicles_by_class;
    //! Subset vehicles per observed severity, split by class.
    std::map<SeverityLevel, VehicleTally> subset_vehicles;
    std::map<SeverityLevel, double> subset_crashes;
    //! Road- and transport-qualified passenger and other-vehicle units.
    double pool_passenger = 0;
    double pool_other = 0;
};

struct Population
{
    PopulationSpec spec;
    std::vector<CrashEvent> crashes;
    std::vector<VehicleInvolvement> vehicles;
    GroundTruth truth;
};

inline Population generate(PopulationSpec const& spec)
{
    spec.validate();
    Population pop;
    pop.spec = spec;
    SplitMix64 rng(spec.seed);
    auto source = spec.effective_source();
    auto n = spec.crash_count();
    char id[32];
    for (std::size_t i = 0; i < n; ++i)
    {
        CrashEvent c;
        std::snprintf(id, sizeof(id), "S%06zu", i + 1);
        c.crash_id = id;
        c.source = source;
        c.region = spec.region;
        c.year = spec.year;
        c.road_class = spec.road.sample(rng);
        c.max_kabco = spec.severity.sample(rng);
        switch (spec.weight_kind)
        {
            case WeightKind::Constant:
                c.sample_weight = spec.weight_value;
                break;
            case WeightKind::UniformInt:
                c.sample_weight = static_cast<double>(rng.uniform_int(
                    static_cast<std::int64_t>(spec.weight_min),
                    static_cast<std::int64_t>(spec.weight_max)));
                break;
            case WeightKind::UniformReal:
                c.sample_weight = spec.weight_min
                                  + (spec.weight_max - spec.weight_min) * rng.uniform();
                break;
        }
        int units = spec.multiplicity_sequence.empty() ? spec.multiplicity.sample(rng)
                                                       : spec.multiplicity_sequence[i];

        double w = c.sample_weight;
        auto& t = pop.truth;
        t.crashes += w;
        VehicleTally subset_units;
        bool tow = false;
        bool airbag = false;
        for (int u = 0; u < units; ++u)
        {
            VehicleInvolvement v;
            v.crash_id = c.crash_id;
            v.unit_id = std::to_string(u + 1);
            v.body_class = spec.body.sample(rng);
            v.in_transport = rng.uniform() < spec.in_transport_probability;
            v.towed = rng.uniform() < spec.tow_probability;
            v.airbag_deployed = rng.uniform() < spec.airbag_probability;

            t.vehicles_by_class[v.body_class] += w;
            if (v.body_class != BodyClass::NonVehicle)
                t.vehicles += w;
            bool qualified = c.road_class == RoadClass::SurfaceStreet && v.in_transport
                             && v.body_class != BodyClass::NonVehicle;
            if (qualified)
            {
                if (v.body_class == BodyClass::Passenger)
                {
                    t.pool_passenger += w;
                    subset_units.passenger += w;
                }
                else if (v.body_class == BodyClass::OtherVehicle)
                {
                    t.pool_other += w;
                }
                else
                {
                    subset_units.nfs += w;
                }
                if (v.body_class != BodyClass::OtherVehicle)
                {
                    tow = tow || v.towed;
                    airbag = airbag || v.airbag_deployed;
                }
            }
            pop.vehicles.push_back(std::move(v));
        }
        if (subset_units.passenger + subset_units.nfs > 0)
        {
            auto k = c.max_kabco;
            bool injury = k == Kabco::K || k == Kabco::A || k == Kabco::B || k == Kabco::C
                          || k == Kabco::InjuredSeverityUnknown;
            std::map<SeverityLevel, bool> flags{
                {SeverityLevel::PoliceReported, true},
                {SeverityLevel::AnyInjuryReported, injury},
                {SeverityLevel::TowAway, tow},
                {SeverityLevel::AirbagDeployed, airbag},
                {SeverityLevel::SuspectedSeriousInjuryPlus, k == Kabco::K || k == Kabco::A},
                {SeverityLevel::Fatal, k == Kabco::K}};
            for (auto const& [level, on] : flags)
            {
                auto& tally = t.subset_vehicles[level];
                auto& crashes = t.subset_crashes[level];
                if (!on)
                    continue;
                tally.passenger += subset_units.passenger;
                tally.nfs += subset_units.nfs;
                crashes += w;
            }
        }
        pop.crashes.push_back(std::move(c));
    }
    return pop;
}

//---------------------------------------------------------------------------//
// Brute-force oracle
//---------------------------------------------------------------------------//

enum class TallyLevel
{
    Vehicle,
    Crash
};

struct TallyQuestion
{
    std::optional<SeverityLevel> severity;  //!< nullopt: no severity filter
    bool surface_streets_only = true;
    bool in_transport_only = true;
    std::vector<BodyClass> classes{BodyClass::Passenger, BodyClass::VehicleNFS};
    TallyLevel level = TallyLevel::Vehicle;
    bool weighted = true;
};

/*!
 * Answer a count question by scanning every vehicle for every crash. Slow by
 * design and written without the filters/rates code paths.
 */
inline double brute_force_tally(std::vector<CrashEvent> const& crashes,
                                std::vector<VehicleInvolvement> const& vehicles,
                                TallyQuestion const& q)
{
    double total = 0;
    for (auto const& c : crashes)
    {
        if (q.surface_streets_only && c.road_class != RoadClass::SurfaceStreet)
            continue;
        int n = 0;
        bool towed = c.tow_away;
        bool airbag = c.airbag_deployed;
        for (auto const& v : vehicles)
        {
            if (v.crash_id != c.crash_id)
                continue;
            if (v.body_class == BodyClass::NonVehicle)
                continue;
            if (q.in_transport_only && !v.in_transport)
                continue;
            bool listed = false;
            for (auto b : q.classes)
                listed = listed || b == v.body_class;
            if (!listed)
                continue;
            ++n;
            towed = towed || v.towed;
            airbag = airbag || v.airbag_deployed;
        }
        if (n == 0)
            continue;
        bool hit = true;
        if (q.severity)
        {
            char k = to_string(c.max_kabco)[0];
            bool isu = c.max_kabco == Kabco::InjuredSeverityUnknown;
            switch (*q.severity)
            {
                case SeverityLevel::PoliceReported:
                    hit = true;
                    break;
                case SeverityLevel::AnyInjuryReported:
                    hit = k == 'K' || k == 'A' || k == 'B' || k == 'C' || isu;
                    break;
                case SeverityLevel::TowAway:
                    hit = towed;
                    break;
                case SeverityLevel::AirbagDeployed:
                    hit = airbag;
                    break;
                case SeverityLevel::SuspectedSeriousInjuryPlus:
                    hit = k == 'K' || k == 'A';
                    break;
                case SeverityLevel::Fatal:
                    hit = k == 'K';
                    break;
                case SeverityLevel::AnyPropertyDamageOrInjury:
                    throw DomainError("brute-force tally covers observed levels only");
            }
        }
        if (!hit)
            continue;
        double w = q.weighted ? c.sample_weight : 1.0;
        total += (q.level == TallyLevel::Vehicle ? n : 1) * w;
    }
    return total;
}

//! Weighted passenger / (passenger + other) over road- and transport-qualified units.
inline double brute_force_imputation_weight(std::vector<CrashEvent> const& crashes,
                                            std::vector<VehicleInvolvement> const& vehicles,
                                            bool surface_streets_only = true,
                                            bool in_transport_only = true)
{
    TallyQuestion q;
    q.surface_streets_only = surface_streets_only;
    q.in_transport_only = in_transport_only;
    q.classes = {BodyClass::Passenger};
    double p = brute_force_tally(crashes, vehicles, q);
    q.classes = {BodyClass::OtherVehicle};
    double o = brute_force_tally(crashes, vehicles, q);
    if (!(p + o > 0))
        throw UndefinedError("no classified vehicles");
    return p / (p + o);
}

//---------------------------------------------------------------------------//
// Monte Carlo power
//---------------------------------------------------------------------------//

struct PowerSimulation
{
    double benchmark_rate = 0;  //!< per million miles
    double relative_rate = 0.5;
    double vmt_millions = 0;
    double alpha = 0.05;
    std::size_t n_trials = 20000;
    std::uint64_t seed = 1;
    unsigned jobs = 0;  //!< 0: hardware concurrency
};

/*!
 * Fraction of trials in which X ~ Poisson(r * lambda * t) leads a two-sided
 * normal-approximation test of H0: rate = lambda to reject:
 * |X - lambda t| > z_{1-a/2} sqrt(lambda t).
 */
inline double simulate_power(PowerSimulation const& sim)
{
    if (sim.n_trials < 1000)
        throw DomainError("simulate_power needs at least 1000 trials");
    if (!(sim.benchmark_rate > 0 && sim.relative_rate > 0 && sim.vmt_millions > 0))
        throw DomainError("rate, relative rate, and VMT must be positive");
    if (!(sim.alpha > 0 && sim.alpha < 1))
        throw DomainError("alpha must lie in (0, 1)");

    double expected0 = sim.benchmark_rate * sim.vmt_millions;
    double mean = sim.relative_rate * expected0;
    double threshold = normal_quantile(1 - sim.alpha / 2) * std::sqrt(expected0);

    unsigned jobs = sim.jobs ? sim.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, sim.n_trials));
    std::vector<std::size_t> rejections(jobs, 0);
    auto work = [&](unsigned j) {
        std::size_t hits = 0;
        for (std::size_t i = j; i < sim.n_trials; i += jobs)
        {
            SplitMix64 rng(SplitMix64::derive(sim.seed, i));
            std::poisson_distribution<long long> draw(mean);
            auto x = static_cast<double>(draw(rng));
            if (std::abs(x - expected0) > threshold)
                ++hits;
        }
        rejections[j] = hits;
    };
    std::vector<std::thread> threads;
    for (unsigned j = 1; j < jobs; ++j)
        threads.emplace_back(work, j);
    work(0);
    for (auto& t : threads)
        t.join();
    std::size_t total = 0;
    for (auto r : rejections)
        total += r;
    return static_cast<double>(total) / static_cast<double>(sim.n_trials);
}

}  // namespace crashbench
