//! The channel statistics survive a JSON roundtrip bitwise. On-disk caching
//! relies on this: an evaluation from cached statistics must be byte-for-byte
//! identical to one from freshly built statistics, and the Monte-Carlo
//! standard errors amplify even 1-ulp perturbations into visible output
//! differences. Requires serde_json's float_roundtrip feature.

use irsim::scenario::ScenarioConfig;
use irsim::ChannelStatistics;

#[test]
fn roundtrip_is_bitwise() {
    let toml = r#"
        m = 3
        n = 4
        k = 2
        p_db = -50.0
        rho_db = -50.0
        bandwidth_hz = 200e3
        kappa_bs = 0.015876
        kappa_ue = 0.015876
        corr_draws = 2000
        seed = 1
        [phase_noise]
        kind = "von_mises"
        kappa = 2.0
        [geometry]
        d_bs_irs_m = 8.0
        d_irs_ue_m = 60.0
        alpha1 = 2.2
        alpha2 = 3.67
        c1_db = 26.0
        c2_db = 28.0
        penetration_db = 15.0
        carrier_ghz = 2.5
    "#;
    let sc = ScenarioConfig::from_toml(toml).unwrap().build().unwrap();
    let stats = ChannelStatistics::build(&sc).unwrap();
    let text = serde_json::to_string(&stats).unwrap();
    let back: ChannelStatistics = serde_json::from_str(&text).unwrap();
    let cmp_mat = |name: &str, a: &irsim::linalg::CMat, b: &irsim::linalg::CMat| {
        for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
            assert!(
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits(),
                "{name}[{i}]: {x:?} vs {y:?} (bits {:x}/{:x} vs {:x}/{:x})",
                x.re.to_bits(),
                x.im.to_bits(),
                y.re.to_bits(),
                y.im.to_bits()
            );
        }
    };
    assert_eq!(stats.beta1.to_bits(), back.beta1.to_bits());
    for k in 0..2 {
        assert_eq!(stats.beta2[k].to_bits(), back.beta2[k].to_bits(), "beta2");
        assert_eq!(stats.beta_d[k].to_bits(), back.beta_d[k].to_bits(), "beta_d");
        cmp_mat("r_irs", &stats.r_irs[k], &back.r_irs[k]);
        cmp_mat("r_bs", &stats.r_bs[k], &back.r_bs[k]);
        cmp_mat("r_irs_sqrt", &stats.r_irs_sqrt[k], &back.r_irs_sqrt[k]);
        cmp_mat("r_bs_sqrt", &stats.r_bs_sqrt[k], &back.r_bs_sqrt[k]);
    }
    cmp_mat("h1", &stats.h1, &back.h1);
    assert_eq!(stats.m_factor.to_bits(), back.m_factor.to_bits());
}
