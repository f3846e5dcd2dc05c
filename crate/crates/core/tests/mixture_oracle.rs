//! Mixed-Poisson mass and survival against values frozen from an independent
//! 40-digit quadrature (see `oracles/mixture_oracle.py`).

#![allow(clippy::excessive_precision)]

use poismix_core::{MixingSpec, MixtureModel};

const TOL: f64 = 1e-8;

const REFERENCE: &[(&str, u64, f64, f64)] = &[
    ("frechet_1_1", 0, -1.2739241220005686, -0.32813158584208616),
    ("frechet_1_1", 1, -1.4793410244157646, -0.70830043160557561),
    ("frechet_1_1", 5, -3.3077453237284676, -1.7288937305106575),
    ("frechet_1_1", 20, -5.9956364486289916, -3.0219074110438148),
    ("frechet_1_1", 60, -8.1891207789188499, -4.102806347021823),
    ("frechet_1_1", 150, -10.021338201523148, -5.0139890713658914),
    ("frechet_2_1", 0, -1.2271501260787185, -0.34690392586829116),
    ("frechet_2_1", 1, -1.2036664212316041, -0.89947956419741898),
    ("frechet_2_1", 5, -3.6494697536355111, -3.0639286784000184),
    ("frechet_2_1", 20, -8.1410703084397675, -5.9418043060408913),
    ("frechet_2_1", 60, -11.539491115654323, -8.1720332413661272),
    ("frechet_2_1", 150, -14.318693287195686, -10.014604582109777),
    ("lognormal_0_1", 0, -0.96297240050030377, -0.4808728291746803),
    ("lognormal_0_1", 1, -1.3514828821346528, -1.0233543289974443),
    ("lognormal_0_1", 5, -3.5686052964838288, -2.831850248412917),
    ("lognormal_0_1", 20, -8.1299485932895213, -6.4333245450201216),
    ("lognormal_0_1", 60, -13.228728300138059, -10.651589244350313),
    ("lognormal_0_1", 150, -18.385307407625054, -15.050544863472937),
    ("lognormal_1_1", 0, -1.8514828821346528, -0.17079327344910392),
    ("lognormal_1_1", 1, -1.7387870759784994, -0.40457190355173946),
    ("lognormal_1_1", 5, -2.7397437935097266, -1.3586731095328493),
    ("lognormal_1_1", 20, -5.7859855249644527, -3.7168593916161715),
    ("lognormal_1_1", 60, -9.7036670612678457, -6.8630934384416997),
    ("lognormal_1_1", 150, -13.908390845540088, -10.362573839227835),
    ("uniform_5", 0, -1.6161986618835889, -0.22146048172101235),
    ("uniform_5", 1, -1.6507055082975067, -0.49522605585286956),
    ("uniform_5", 5, -2.566448182705087, -2.3160807436549549),
    ("uniform_5", 20, -17.937113214245686, -19.191775892854075),
    ("uniform_5", 60, -101.08881086281815, -103.525431367721),
    ("uniform_5", 150, -373.58825844186776, -376.96971234191977),
    ("scaled_beta_5_2_0.25", 0, -3.7548632573933981, -0.023681865500628329),
    ("scaled_beta_5_2_0.25", 1, -2.741713256594473, -0.091965592544945426),
    ("scaled_beta_5_2_0.25", 5, -1.8409078659396683, -1.1958685936045009),
    ("scaled_beta_5_2_0.25", 20, -15.727379983751403, -16.926302177564835),
    ("scaled_beta_5_2_0.25", 60, -97.946382481787349, -100.36859901758506),
    ("scaled_beta_5_2_0.25", 150, -369.72655343977703, -373.10271103559074),
    ("scaled_beta_5_2_2", 0, -1.9223424114930153, -0.15813320813305682),
    ("scaled_beta_5_2_2", 1, -1.5678426445487182, -0.43813052756002913),
    ("scaled_beta_5_2_2", 5, -2.609402165498543, -2.5521048568363878),
    ("scaled_beta_5_2_2", 20, -19.122237111968199, -20.436973166136828),
    ("scaled_beta_5_2_2", 60, -103.37804614193569, -105.83275476976594),
    ("scaled_beta_5_2_2", 150, -376.80098713392499, -380.18934608669457),
];

fn spec(name: &str) -> MixingSpec {
    match name {
        "frechet_1_1" => MixingSpec::frechet(1.0, 1.0),
        "frechet_2_1" => MixingSpec::frechet(2.0, 1.0),
        "lognormal_0_1" => MixingSpec::lognormal(0.0, 1.0),
        "lognormal_1_1" => MixingSpec::lognormal(1.0, 1.0),
        "uniform_5" => MixingSpec::uniform(5.0),
        "scaled_beta_5_2_0.25" => MixingSpec::scaled_beta(5.0, 2.0, 0.25),
        "scaled_beta_5_2_2" => MixingSpec::scaled_beta(5.0, 2.0, 2.0),
        other => panic!("unknown model {other}"),
    }
    .unwrap()
}

#[test]
fn log_mass_and_survival_match_reference() {
    for &(name, n, ln_pmf, ln_sf) in REFERENCE {
        let m = MixtureModel::new(spec(name)).unwrap();
        let got_pmf = m.ln_pmf(n).unwrap();
        let got_sf = m.ln_survival(n).unwrap();
        assert!((got_pmf - ln_pmf).abs() < TOL, "{name} pmf({n}): {got_pmf} vs {ln_pmf}");
        assert!(
            (got_sf - ln_sf).abs() < TOL,
            "{name} survival({n}): {got_sf} vs {ln_sf}"
        );
    }
}

/// (model, n, exact/asymptotic survival, exact/asymptotic pmf), from `oracles/tail_oracle.py`.
const ASYMPTOTIC_RATIOS: &[(&str, u64, f64, f64)] = &[
    ("uniform_5", 20, 1.5444830860470739, 1.2895166207433471),
    ("uniform_5", 40, 1.2485331686066849, 1.1346594404857497),
    ("uniform_5", 50, 1.1950252290866493, 1.1061487100829356),
    ("uniform_5", 60, 1.1604143339898508, 1.087587215559605),
    ("uniform_5", 80, 1.1183421052997239, 1.0648811386170396),
    ("uniform_5", 200, 1.0459292615534956, 1.0253774584687055),
    ("scaled_beta_5_2_1", 20, 1.49778087824817, 1.2456276072957666),
    ("scaled_beta_5_2_1", 40, 1.2310145591321888, 1.1178396022545445),
    ("scaled_beta_5_2_1", 50, 1.1818723683745928, 1.0934368115869914),
    ("scaled_beta_5_2_1", 60, 1.1499195921877557, 1.0773951374404306),
    ("scaled_beta_5_2_1", 80, 1.1108964797132582, 1.0576028586668383),
    ("scaled_beta_5_2_1", 200, 1.0432439339190446, 1.0227179046915527),
];

#[test]
fn weibull_domain_asymptotic_ratios_match_reference() {
    for &(name, n, want_sf, want_pmf) in ASYMPTOTIC_RATIOS {
        let m = MixtureModel::new(match name {
            "uniform_5" => MixingSpec::uniform(5.0).unwrap(),
            _ => MixingSpec::scaled_beta(5.0, 2.0, 1.0).unwrap(),
        })
        .unwrap();
        let sf = (m.ln_survival(n).unwrap() - m.ln_asymptotic_survival_dminus(n).unwrap()).exp();
        let pmf = (m.ln_pmf(n).unwrap() - m.ln_asymptotic_pmf_dminus(n).unwrap()).exp();
        assert!((sf - want_sf).abs() < 1e-8, "{name} n={n}: {sf} vs {want_sf}");
        assert!((pmf - want_pmf).abs() < 1e-8, "{name} n={n}: {pmf} vs {want_pmf}");
    }
}

#[test]
fn asymptotic_survival_and_shifted_pmf_agree_in_the_limit() {
    let m = MixtureModel::new(MixingSpec::scaled_beta(5.0, 2.0, 1.0).unwrap()).unwrap();
    let gap = |n: u64| {
        let r = (m.ln_asymptotic_survival_dminus(n).unwrap() - m.ln_asymptotic_pmf_dminus(n + 1).unwrap()).exp();
        (r - 1.0).abs()
    };
    assert!(gap(1000) < gap(100) && gap(100) < gap(10));
    assert!(gap(100_000) < 1e-4);
}

/// |F̄(n+1)/F̄(n) − limit| at a reference n, from `oracles/tail_oracle.py`.
const TAIL_GAPS: &[(&str, u64, f64)] = &[
    ("frechet_1_1", 2000, 0.0004996251353490221),
    ("lognormal_0_1", 2000, 0.0038604203645766368),
    ("uniform_5", 200, 0.024624448554197358),
    ("gamma_2_1", 800, 0.00062266500622665006),
    ("gamma_2_2", 500, 0.00066334991708125778),
];

#[test]
fn tail_ratio_gaps_match_reference() {
    for &(name, n, want) in TAIL_GAPS {
        let spec = match name {
            "gamma_2_1" => MixingSpec::gamma(2.0, 1.0).unwrap(),
            "gamma_2_2" => MixingSpec::gamma(2.0, 2.0).unwrap(),
            other => spec(other),
        };
        let m = MixtureModel::new(spec).unwrap();
        let gap = (m.tail_ratio(n, 1).unwrap() - m.tail_ratio_limit(1)).abs();
        assert!((gap - want).abs() < 1e-8 * want.max(1e-3), "{name}: {gap} vs {want}");
    }
}
