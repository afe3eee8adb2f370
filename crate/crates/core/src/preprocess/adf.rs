//! Augmented Dickey-Fuller unit-root test (regression with constant, no trend).
//!
//! Lag order starts at the Schwert rule `floor(12 * (n/100)^(1/4))` and is
//! reduced by backward elimination: drop the highest lag while its t-statistic
//! is insignificant at the two-sided 10% level, holding the estimation sample
//! fixed, then refit at the chosen order on the maximal sample. P-values come
//! from the MacKinnon (1994) approximate response surface for the
//! constant-only case, as tabulated in statsmodels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{HiveId, HiveSeries};

/// Two-sided 10% critical value of the standard normal, used by the lag
/// elimination rule.
const T_STAT_STOP: f64 = 1.6448536269514722;

/// MacKinnon response-surface coefficients, constant-only regression.
const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const TAU_SMALL_P: [f64; 3] = [2.1659, 1.4412, 0.038269];
const TAU_LARGE_P: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

/// Significance level deciding the `stationary` flag.
pub const STATIONARY_ALPHA: f64 = 0.05;

/// Outcome of one ADF test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-statistic of the lagged level coefficient.
    pub statistic: f64,
    /// MacKinnon approximate p-value.
    pub p_value: f64,
    /// Number of lagged difference terms kept.
    pub lag_order: usize,
    /// Effective regression sample size.
    pub n_obs: usize,
    /// `p_value < 0.05`.
    pub stationary: bool,
}

/// ADF result for one (hive, variable) pair; differenced variables carry the
/// `d_` prefix in `variable`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdfDiagnostic {
    pub hive_id: HiveId,
    pub variable: String,
    #[serde(flatten)]
    pub result: AdfResult,
}

#[derive(Debug, Error)]
pub enum AdfError {
    #[error("insufficient data: {available} usable observations, need at least {required}")]
    InsufficientData { required: usize, available: usize },
    #[error("degenerate regression (constant or collinear series)")]
    Degenerate,
}

/// Ordinary least squares via normal equations with a Cholesky solve.
/// Returns the coefficients and their t-statistics.
fn ols_t_stats(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AdfError> {
    let n = rows.len();
    let k = rows[0].len();
    if n <= k {
        return Err(AdfError::InsufficientData { required: k + 1, available: n });
    }
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in i..k {
                xtx[i * k + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i * k + j] = xtx[j * k + i];
        }
    }

    // In-place Cholesky: xtx = L L^T, L in the lower triangle.
    let mut l = xtx;
    for i in 0..k {
        for j in 0..=i {
            let mut sum = l[i * k + j];
            for m in 0..j {
                sum -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(AdfError::Degenerate);
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    let solve = |b: &[f64]| -> Vec<f64> {
        let mut z = b.to_vec();
        for i in 0..k {
            for m in 0..i {
                z[i] -= l[i * k + m] * z[m];
            }
            z[i] /= l[i * k + i];
        }
        for i in (0..k).rev() {
            for m in i + 1..k {
                z[i] -= l[m * k + i] * z[m];
            }
            z[i] /= l[i * k + i];
        }
        z
    };

    let beta = solve(&xty);
    let mut rss = 0.0;
    for (row, &yi) in rows.iter().zip(y) {
        let fitted: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        rss += (yi - fitted) * (yi - fitted);
    }
    let sigma2 = rss / (n - k) as f64;
    let mut t_stats = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let inv_col = solve(&e);
        let se = (sigma2 * inv_col[j]).sqrt();
        if se == 0.0 || !se.is_finite() {
            return Err(AdfError::Degenerate);
        }
        t_stats.push(beta[j] / se);
    }
    Ok((beta, t_stats))
}

/// Regression rows for time indices `start..n`: target `dy[t]`, regressors
/// `[1, y[t-1], dy[t-1], ..., dy[t-p]]`.
fn design(y: &[f64], dy: &[f64], p: usize, start: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = y.len();
    let mut rows = Vec::with_capacity(n - start);
    let mut target = Vec::with_capacity(n - start);
    for t in start..n {
        let mut row = Vec::with_capacity(p + 2);
        row.push(1.0);
        row.push(y[t - 1]);
        for lag in 1..=p {
            row.push(dy[t - 1 - lag]);
        }
        rows.push(row);
        target.push(dy[t - 1]);
    }
    (rows, target)
}

fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// MacKinnon approximate p-value for the constant-only ADF statistic.
pub fn mackinnon_p_value(statistic: f64) -> f64 {
    if statistic > TAU_MAX {
        return 1.0;
    }
    if statistic < TAU_MIN {
        return 0.0;
    }
    let coeffs: &[f64] =
        if statistic <= TAU_STAR { &TAU_SMALL_P } else { &TAU_LARGE_P };
    norm_cdf(polyval(coeffs, statistic))
}

/// Runs the ADF test on a level series.
///
/// Needs at least 21 observations so that 20 remain after differencing; the
/// starting lag order is clamped so the selection sample keeps 20 rows.
pub fn adf_test(values: &[f64]) -> Result<AdfResult, AdfError> {
    let n = values.len();
    if n < 21 {
        return Err(AdfError::InsufficientData { required: 21, available: n });
    }
    let schwert = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    let max_lag = schwert.min(n - 21);

    // dy[t-1] = y[t] - y[t-1].
    let dy: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();

    // Backward elimination on a sample held fixed at the widest trimming.
    let start = max_lag + 1;
    let mut lag_order = 0;
    for p in (1..=max_lag).rev() {
        let (rows, target) = design(values, &dy, p, start);
        let (_, t_stats) = ols_t_stats(&rows, &target)?;
        if t_stats[p + 1].abs() >= T_STAT_STOP {
            lag_order = p;
            break;
        }
    }

    // Final fit at the chosen order on the maximal sample.
    let (rows, target) = design(values, &dy, lag_order, lag_order + 1);
    let n_obs = rows.len();
    let (_, t_stats) = ols_t_stats(&rows, &target)?;
    let statistic = t_stats[1];
    let p_value = mackinnon_p_value(statistic);
    Ok(AdfResult {
        statistic,
        p_value,
        lag_order,
        n_obs,
        stationary: p_value < STATIONARY_ALPHA,
    })
}

/// Present values of a column in date order (gaps compacted).
fn present(column: &[Option<f64>]) -> Vec<f64> {
    column.iter().flatten().copied().collect()
}

/// ADF diagnostics for every column of a panel of series (levels and
/// differences alike - callers pass whichever panels they want tested).
/// Columns too short or degenerate are skipped.
pub fn panel_diagnostics(panels: &[&HiveSeries]) -> Vec<AdfDiagnostic> {
    let mut out = Vec::new();
    for series in panels {
        for (name, column) in &series.values {
            let values = present(column);
            match adf_test(&values) {
                Ok(result) => out.push(AdfDiagnostic {
                    hive_id: series.hive_id.clone(),
                    variable: name.clone(),
                    result,
                }),
                Err(e) => {
                    log::info!("adf skipped for {} / {name}: {e}", series.hive_id);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    // Reference series and expected results generated with
    // statsmodels.tsa.stattools.adfuller (regression="c", autolag="t-stat",
    // maxlag = floor(12 * (n/100)^0.25)).

    // stat=-2.7764754012023634, p=0.06171345472722287, usedlag=9, nobs=110
    const AR1_SERIES: [f64; 120] = [
        0.0, -1.0399841062404955, 0.23045914268620948, 1.0557942877343187, -1.423138044786677,
        -2.0137485292556567, -0.879033861460543, -0.7557595230738536, -0.3946809190412156,
        -1.0503843870941878, 0.35420578131573466, 0.9548948260868156, 0.5434781106046238,
        1.3989802622703449, 1.166999473387218, -0.27579272618962924, 0.23085442098768422,
        -0.8434553903351568, 0.4567226061396941, 0.17843539208359416, -0.09564466750346348,
        -0.7287518781556731, 0.8581653995961938, 0.27455321772929475, -0.29105121329845984,
        -0.4976591571374595, 0.28347960698461894, 0.5071838678563878, 0.6663245455241823,
        0.7639832757699738, 2.523639238755448, 0.8554046029931084, -0.08454042757498315,
        -0.8560429420353692, 0.18795795155781103, 1.2229512684997972, 0.4975281765950235,
        -0.5913923886650163, -1.1201774100237478, 0.09050408281282718, 0.7885062126098559,
        0.9374073746101229, -0.19680601998363284, 0.13375831307490335, 0.1835649656781799,
        0.3104710795681029, 1.0266643177322412, 0.7369277076408028, 1.0473774168922962,
        0.5912677779350396, 0.5847532876575039, 0.9236648696672923, -0.9953233850220202,
        -0.8173329088683114, -0.8790391087269512, -1.0783974026068175, -0.8143409525300924,
        1.0877708349693496, -0.32194569820856844, 0.8073055054871966, -1.2792170188722065,
        -0.9744935394218781, -0.32449370460593346, 0.4239754790563114, 0.9232143193210107,
        1.2549543948604307, 0.2787521251817778, -0.3229757300736783, 0.6964880162203146,
        0.15693968322854243, -1.1972164817236506, -1.731895454865306, -1.7854000134342645,
        -0.3955392626633682, -0.05534389526111885, 0.6628134064372088, -0.09584594311792988,
        0.11061671951774929, 0.6808987537262113, 0.031102837142867268, 0.47232665612884506,
        -0.42576261300222873, -0.5759351530661861, -0.6697054705314222, -1.5306923808547508,
        -0.2783737096417936, -0.6085891950236206, -0.2918004787841229, 0.3348464195138475,
        0.6139543857868679, 0.9723623018662202, 0.38769566642368647, -0.2294504788323105,
        -0.1944434503225543, -1.784556159119307, -2.3393905519827407, -2.492394888345773,
        -2.243444271774368, -0.7219479091637475, -1.2664530099419347, -1.011389059010357,
        0.793533768280887, 0.040502913079017544, 0.7577670250065953, -0.5547341675065793,
        -0.4828046416209197, -1.191424375721041, -0.9347452637610829, 0.37293550557685406,
        -1.5408526704039216, -0.33600269165610347, 0.06973425650422616, -0.5592828274446813,
        -1.7256992681107952, -0.7907201263415281, -0.9248527722345665, -0.2297501747625793,
        -0.09302294185784678, 1.555267420391992, 0.5382780827229717,
    ];

    // stat=-2.80763813851859, p=0.057190970385704865, usedlag=7, nobs=112
    const RW_SERIES: [f64; 120] = [
        -1.023497492621865, -0.8442218576655488, -0.6242251736937836, 0.7349624015466529,
        1.5700736474612316, 1.9269447066107408, 3.3902475978303026, 2.2014845435074517,
        1.5617330107577039, 0.635157069352179, 0.245347266196411, -1.131338881359898,
        -0.4961879345454936, -0.718410631644267, -2.189216926146925, -3.2047960073544663,
        -2.891282159904271, -2.05315559200989, -0.056424700318103316, 2.8574377656892263,
        3.2718471989652227, 2.2823090789333587, 0.15026279820204946, 0.41797426054588527,
        -0.3949668347644407, -0.810324094944126, -1.4224208940039342, -1.5632117804203194,
        -0.4972315496326758, -0.3401829821873312, -0.4988178192260195, -1.5344715720518312,
        -3.209154516756188, -3.695462425829519, -3.749244976647839, -1.9813150630679561,
        -1.8510405415950704, -0.8683010305720128, -1.3675966291111648, -2.5525403955281893,
        -3.5176571577605613, -4.242883222296315, -2.11441348986115, -2.935800169085536,
        -2.097310965349191, -3.0002381434362175, -2.0686651305619734, -1.6837141644561102,
        -1.8403520621142007, -1.8811145882496347, -2.5359022836790253, -2.089830082196945,
        -2.544813562537725, -3.770419326304973, -5.048356900624592, -4.875768982902472,
        -3.296677726492037, -3.136686112918599, -3.2553244390284815, -2.9694982994259385,
        -1.6634965577191136, -1.4441140563552572, -1.8550412871889943, -0.7487525771291055,
        -0.319996138667492, 1.2157598533285001, 1.3989942905504062, 0.174525258829906,
        -1.193633940415759, 0.4572939918154906, 2.1809597125987876, 2.001440499316187,
        1.6182531781801994, 3.079697470422402, 1.9726517883789139, 1.0779247694230873,
        1.7212515641121318, 1.3266464412525423, 1.321524574532471, 1.1580816760079584,
        1.495656224806892, 2.9031380861206086, 2.993722993022354, 3.637661786299212,
        1.5874896852681895, 1.5387712833380716, 0.6955410130452004, -0.5232720473784276,
        -1.4014244143071783, -1.7355478550079904, -0.8196453126519773, -2.146038030391541,
        -2.115406537797124, -2.5995759711307023, -2.927249065492663, -1.924491240188059,
        -1.386375803184133, -0.048977695741389216, -0.20348337499128968, -0.8994259866619927,
        -1.1232848035424923, -0.8807880122712707, -0.7042146538175597, -1.788602726050926,
        -1.6981129444230518, -1.4698846142841466, 1.0475894232497738, 2.924434034531444,
        2.071190683972624, 1.7838073224234479, 0.32036532058644474, -0.2703416933770417,
        0.04526331021329877, 1.2511169311015324, 0.5220330933579239, -0.13211334670987263,
        -2.2794023764485276, -2.442068296993435, -3.504482708852998, -4.033922136219072,
    ];

    // stat=-8.256322085110021, p=5.225461186424937e-13, usedlag=0, nobs=59
    const SHORT_SERIES: [f64; 60] = [
        -0.4384303890837941, 0.1461340290450288, -0.5832292766817776, -0.47455981270083314,
        1.1651200010609206, -0.7489462589439014, -0.8098655209513961, 0.6237209803733572,
        1.263153593258507, -0.580739144267366, 0.01297150122162144, 0.46722824563335486,
        1.1207284946292806, -0.3976990305093131, -0.2325826617466329, 0.12476006003937101,
        -0.07637028151208591, -0.37351916928616, -0.056824568091679566, -0.48657697552601065,
        0.17809533472112846, 0.12053030433840273, 0.20702045183683915, -0.39228503456470976,
        -0.030500848801881336, 0.213670107269467, -0.1037351828876522, 0.1910050105416451,
        0.23116675980937357, 0.2978721182964791, -0.10978232521060688, 0.24436292623497252,
        -0.16791000414317458, 0.7780279441193934, 0.495137917514462, 0.015516017318713105,
        -0.3613661830897413, -0.3479563355160364, 0.8939649087077839, 0.37957298275218343,
        0.32134343818816613, -0.9961712582592583, 0.19295285831603476, -0.06309867053296034,
        -0.7285298555409594, -0.21057006701745148, 0.34370943933235854, 0.32510597780458084,
        0.09924428345615624, 0.024660565820230095, -0.254443489952288, -0.19661874549882327,
        0.4467499191544503, -1.4525019874407292, -0.08821000315709196, 0.3036485885177167,
        0.4472642205158911, 0.0564347304394506, -0.8068448297146216, 0.031002722601958577,
    ];

    #[test]
    fn matches_statsmodels_on_an_ar1_series() {
        let result = adf_test(&AR1_SERIES).unwrap();
        assert_eq!(result.lag_order, 9);
        assert_eq!(result.n_obs, 110);
        assert_relative_eq!(result.statistic, -2.7764754012023634, epsilon = 1e-8);
        assert_relative_eq!(result.p_value, 0.06171345472722287, epsilon = 1e-8);
        assert!(!result.stationary);
    }

    #[test]
    fn matches_statsmodels_on_a_random_walk() {
        let result = adf_test(&RW_SERIES).unwrap();
        assert_eq!(result.lag_order, 7);
        assert_eq!(result.n_obs, 112);
        assert_relative_eq!(result.statistic, -2.80763813851859, epsilon = 1e-8);
        assert_relative_eq!(result.p_value, 0.057190970385704865, epsilon = 1e-8);
    }

    #[test]
    fn matches_statsmodels_when_all_lags_are_eliminated() {
        let result = adf_test(&SHORT_SERIES).unwrap();
        assert_eq!(result.lag_order, 0);
        assert_eq!(result.n_obs, 59);
        assert_relative_eq!(result.statistic, -8.256322085110021, epsilon = 1e-8);
        assert!(result.p_value < 1e-10);
        assert!(result.stationary);
    }

    #[test]
    fn white_noise_is_stationary_and_a_walk_is_not() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f64> = (0..250).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let res = adf_test(&noise).unwrap();
        assert!(res.stationary, "white noise should reject the unit root: {res:?}");

        let mut walk = Vec::with_capacity(250);
        let mut level = 0.0;
        for _ in 0..250 {
            level += rng.sample::<f64, _>(StandardNormal);
            walk.push(level);
        }
        let res = adf_test(&walk).unwrap();
        assert!(!res.stationary, "random walk should not reject: {res:?}");
    }

    #[test]
    fn too_short_series_error() {
        let short = vec![1.0; 20];
        assert!(matches!(
            adf_test(&short),
            Err(AdfError::InsufficientData { required: 21, available: 20 })
        ));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let flat = vec![5.0; 50];
        assert!(matches!(adf_test(&flat), Err(AdfError::Degenerate)));
    }

    #[test]
    fn mackinnon_surface_is_monotone_and_calibrated() {
        // Classic constant-only critical values sit near their nominal levels.
        let p1 = mackinnon_p_value(-3.43);
        let p5 = mackinnon_p_value(-2.86);
        let p10 = mackinnon_p_value(-2.57);
        assert!((p1 - 0.01).abs() < 0.002, "p at 1% cv: {p1}");
        assert!((p5 - 0.05).abs() < 0.005, "p at 5% cv: {p5}");
        assert!((p10 - 0.10).abs() < 0.01, "p at 10% cv: {p10}");
        assert!(mackinnon_p_value(-19.0) == 0.0);
        assert!(mackinnon_p_value(3.0) == 1.0);
        let mut prev = 0.0;
        for i in 0..100 {
            let t = -10.0 + 0.13 * i as f64;
            let p = mackinnon_p_value(t);
            assert!(p >= prev);
            prev = p;
        }
    }
}
