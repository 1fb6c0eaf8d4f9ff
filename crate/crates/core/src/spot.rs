//! Lane-month spot price benchmark.
//!
//! Spot linehaul prices are regressed on a continuous distance term plus
//! origin-region, destination-region, month and year indicators:
//!
//! ```text
//! price = b_base + b_dist * distance + b_origin[i] + b_dest[j] + b_month[m] + b_year[y] + e
//! ```
//!
//! The base case (one origin, destination, month and year) has no indicator
//! column and carries an implicit coefficient of zero. Coefficients come from
//! a Householder QR least-squares solve; the covariance is the HC1
//! heteroskedasticity-consistent sandwich.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{
    pair_key, Region, RegionTaxonomy, DEFAULT_BASE_DEST, DEFAULT_BASE_ORIGIN, MIN_LANE_DISTANCE,
};
use crate::error::{Error, Result};
use crate::io::{self, CsvSchema, CsvTable};
use crate::linalg::{self, ThinQr};

pub const SPOT_OBSERVATIONS_SCHEMA: CsvSchema = CsvSchema {
    name: "spot_observations",
    version: 1,
    columns: &["origin", "dest", "month", "year", "distance", "price"],
};

pub const SPOT_MODEL_SCHEMA: &str = "spot_model/1";

/// A load moved on the spot market.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotObservation {
    pub origin: Region,
    pub dest: Region,
    pub month: u32,
    pub year: i32,
    pub distance: f64,
    pub price: f64,
}

impl SpotObservation {
    pub fn validate(&self) -> Result<()> {
        if !(self.price > 0.0) {
            return Err(Error::domain(format!("spot price {} must be positive", self.price)));
        }
        if !(self.distance > MIN_LANE_DISTANCE) {
            return Err(Error::domain(format!(
                "spot distance {} must exceed {MIN_LANE_DISTANCE}",
                self.distance
            )));
        }
        if !(1..=12).contains(&self.month) {
            return Err(Error::domain(format!("month {} out of 1..=12", self.month)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseCase {
    pub origin: Region,
    pub dest: Region,
    pub month: u32,
    pub year: i32,
}

impl Default for BaseCase {
    /// Lower Atlantic to South Central, January 2016.
    fn default() -> Self {
        BaseCase {
            origin: Region::new(DEFAULT_BASE_ORIGIN),
            dest: Region::new(DEFAULT_BASE_DEST),
            month: 1,
            year: 2016,
        }
    }
}

/// Point estimates of the spot regression. Level maps omit the base case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCoefficients {
    pub base_case: BaseCase,
    pub beta_base: f64,
    pub beta_dist: f64,
    pub beta_origin: BTreeMap<Region, f64>,
    pub beta_dest: BTreeMap<Region, f64>,
    pub beta_month: BTreeMap<u32, f64>,
    pub beta_year: BTreeMap<i32, f64>,
}

fn level_effect<K: Ord + ToString>(
    map: &BTreeMap<K, f64>,
    base: &K,
    key: &K,
    variable: &str,
) -> Result<f64> {
    if key == base {
        return Ok(0.0);
    }
    map.get(key).copied().ok_or_else(|| Error::UnknownLevel {
        variable: variable.into(),
        level: key.to_string(),
    })
}

impl SpotCoefficients {
    /// Benchmark spot price for a lane-month at the given average distance.
    /// Levels never seen in fitting are an error, not the base case.
    pub fn predict(
        &self,
        origin: &Region,
        dest: &Region,
        month: u32,
        year: i32,
        avg_distance: f64,
    ) -> Result<f64> {
        let b = &self.base_case;
        Ok(self.beta_base
            + self.beta_dist * avg_distance
            + level_effect(&self.beta_origin, &b.origin, origin, "origin")?
            + level_effect(&self.beta_dest, &b.dest, dest, "dest")?
            + level_effect(&self.beta_month, &b.month, &month, "month")?
            + level_effect(&self.beta_year, &b.year, &year, "year")?)
    }
}

/// Fitted spot benchmark with its HC1 covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotModel {
    pub schema: String,
    pub coefficients: SpotCoefficients,
    /// Column order of `robust_cov`.
    pub coefficient_names: Vec<String>,
    pub robust_cov: Vec<Vec<f64>>,
    /// Mean distance of fitted loads per `ORIGIN>DEST` pair.
    pub lane_mean_distance: BTreeMap<String, f64>,
    pub n_obs: usize,
    /// Hash of the inputs that produced the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

struct Levels {
    origins: Vec<Region>,
    dests: Vec<Region>,
    months: Vec<u32>,
    years: Vec<i32>,
}

fn non_base_levels<K: Ord + Clone + ToString>(
    values: impl Iterator<Item = K>,
    base: &K,
    variable: &str,
) -> Result<Vec<K>> {
    let mut set: Vec<K> = values.collect();
    set.sort();
    set.dedup();
    if !set.contains(base) {
        return Err(Error::InsufficientData(format!(
            "no observations at base {variable} level {}",
            base.to_string()
        )));
    }
    set.retain(|k| k != base);
    Ok(set)
}

impl Levels {
    fn collect(obs: &[SpotObservation], base: &BaseCase) -> Result<Self> {
        Ok(Levels {
            origins: non_base_levels(obs.iter().map(|o| o.origin.clone()), &base.origin, "origin")?,
            dests: non_base_levels(obs.iter().map(|o| o.dest.clone()), &base.dest, "dest")?,
            months: non_base_levels(obs.iter().map(|o| o.month), &base.month, "month")?,
            years: non_base_levels(obs.iter().map(|o| o.year), &base.year, "year")?,
        })
    }

    fn names(&self) -> Vec<String> {
        let mut names = vec!["const".to_string(), "distance".to_string()];
        names.extend(self.origins.iter().map(|r| format!("origin:{r}")));
        names.extend(self.dests.iter().map(|r| format!("dest:{r}")));
        names.extend(self.months.iter().map(|m| format!("month:{m}")));
        names.extend(self.years.iter().map(|y| format!("year:{y}")));
        names
    }

    fn design(&self, obs: &[SpotObservation]) -> DMatrix<f64> {
        let o_off = 2;
        let d_off = o_off + self.origins.len();
        let m_off = d_off + self.dests.len();
        let y_off = m_off + self.months.len();
        let p = y_off + self.years.len();
        let mut x = DMatrix::<f64>::zeros(obs.len(), p);
        for (i, ob) in obs.iter().enumerate() {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = ob.distance;
            if let Ok(k) = self.origins.binary_search(&ob.origin) {
                x[(i, o_off + k)] = 1.0;
            }
            if let Ok(k) = self.dests.binary_search(&ob.dest) {
                x[(i, d_off + k)] = 1.0;
            }
            if let Ok(k) = self.months.binary_search(&ob.month) {
                x[(i, m_off + k)] = 1.0;
            }
            if let Ok(k) = self.years.binary_search(&ob.year) {
                x[(i, y_off + k)] = 1.0;
            }
        }
        x
    }
}

/// Fits the spot benchmark by OLS with HC1 robust covariance.
pub fn fit_spot_model(observations: &[SpotObservation], base_case: &BaseCase) -> Result<SpotModel> {
    for ob in observations {
        ob.validate()?;
    }
    if observations.is_empty() {
        return Err(Error::InsufficientData("no spot observations".into()));
    }
    let levels = Levels::collect(observations, base_case)?;
    let names = levels.names();
    let n = observations.len();
    let p = names.len();
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }

    let x = levels.design(observations);
    let y = DVector::from_iterator(n, observations.iter().map(|o| o.price));
    let qr = ThinQr::new(x.clone(), &names)?;
    let beta = qr.solve(&y);
    let resid = &y - &x * &beta;

    // HC1: R^{-1} (Q' diag(e^2) Q) R^{-T} * n / (n - p)
    let q = qr.q();
    let mut meat = DMatrix::<f64>::zeros(p, p);
    for i in 0..n {
        let e2 = resid[i] * resid[i];
        if e2 == 0.0 {
            continue;
        }
        let qi = q.row(i);
        for a in 0..p {
            let w = e2 * qi[a];
            for b in a..p {
                meat[(a, b)] += w * qi[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            meat[(a, b)] = meat[(b, a)];
        }
    }
    let r_inv = qr.r_inverse();
    let mut cov = &r_inv * meat * r_inv.transpose() * (n as f64 / (n - p) as f64);
    linalg::symmetrize(&mut cov);

    let mut coefficients = SpotCoefficients {
        base_case: base_case.clone(),
        beta_base: beta[0],
        beta_dist: beta[1],
        beta_origin: BTreeMap::new(),
        beta_dest: BTreeMap::new(),
        beta_month: BTreeMap::new(),
        beta_year: BTreeMap::new(),
    };
    let mut k = 2;
    for r in &levels.origins {
        coefficients.beta_origin.insert(r.clone(), beta[k]);
        k += 1;
    }
    for r in &levels.dests {
        coefficients.beta_dest.insert(r.clone(), beta[k]);
        k += 1;
    }
    for m in &levels.months {
        coefficients.beta_month.insert(*m, beta[k]);
        k += 1;
    }
    for y in &levels.years {
        coefficients.beta_year.insert(*y, beta[k]);
        k += 1;
    }

    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for ob in observations {
        let e = sums.entry(pair_key(&ob.origin, &ob.dest)).or_insert((0.0, 0));
        e.0 += ob.distance;
        e.1 += 1;
    }
    let lane_mean_distance = sums
        .into_iter()
        .map(|(k, (s, c))| (k, s / c as f64))
        .collect();

    Ok(SpotModel {
        schema: SPOT_MODEL_SCHEMA.to_string(),
        coefficients,
        coefficient_names: names,
        robust_cov: linalg::to_rows(&cov),
        lane_mean_distance,
        n_obs: n,
        config_hash: None,
    })
}

/// Benchmark spot price for a lane-month at `avg_distance`.
pub fn predict_spot(
    model: &SpotModel,
    origin: &Region,
    destination: &Region,
    month: u32,
    year: i32,
    avg_distance: f64,
) -> Result<f64> {
    model
        .coefficients
        .predict(origin, destination, month, year, avg_distance)
}

/// Square roots of the HC1 covariance diagonal, keyed by coefficient name.
pub fn robust_standard_errors(model: &SpotModel) -> BTreeMap<String, f64> {
    model
        .coefficient_names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.clone(), model.robust_cov[i][i].max(0.0).sqrt()))
        .collect()
}

impl SpotModel {
    /// Coefficient estimates in `coefficient_names` order.
    pub fn estimates(&self) -> Vec<f64> {
        let c = &self.coefficients;
        let mut v = vec![c.beta_base, c.beta_dist];
        v.extend(c.beta_origin.values());
        v.extend(c.beta_dest.values());
        v.extend(c.beta_month.values());
        v.extend(c.beta_year.values());
        v
    }

    pub fn lane_distance(&self, origin: &Region, dest: &Region) -> Option<f64> {
        self.lane_mean_distance.get(&pair_key(origin, dest)).copied()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: SpotModel = io::read_json(path)?;
        if model.schema != SPOT_MODEL_SCHEMA {
            return Err(Error::schema(
                path.display().to_string(),
                1,
                "schema",
                format!("expected {SPOT_MODEL_SCHEMA}, found {}", model.schema),
            ));
        }
        Ok(model)
    }
}

pub fn read_spot_observations(path: &Path, taxonomy: &RegionTaxonomy) -> Result<Vec<SpotObservation>> {
    let table = CsvTable::read(path, &SPOT_OBSERVATIONS_SCHEMA, false)?;
    table
        .rows()
        .map(|row| {
            let ob = SpotObservation {
                origin: row.parse_with("origin", |s| taxonomy.region(s))?,
                dest: row.parse_with("dest", |s| taxonomy.region(s))?,
                month: row.parse("month")?,
                year: row.parse("year")?,
                distance: row.parse("distance")?,
                price: row.parse("price")?,
            };
            ob.validate().map_err(|e| row.error("-", e.to_string()))?;
            Ok(ob)
        })
        .collect()
}

pub fn write_spot_observations(path: &Path, obs: &[SpotObservation], config_hash: &str) -> Result<()> {
    io::write_csv(
        path,
        &SPOT_OBSERVATIONS_SCHEMA,
        config_hash,
        obs.iter().map(|o| {
            vec![
                o.origin.to_string(),
                o.dest.to_string(),
                o.month.to_string(),
                o.year.to_string(),
                io::fmt_f64(o.distance),
                io::fmt_f64(o.price),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(s: &str) -> Region {
        Region::new(s)
    }

    fn base() -> BaseCase {
        BaseCase {
            origin: r("A"),
            dest: r("B"),
            month: 1,
            year: 2016,
        }
    }

    fn truth() -> SpotCoefficients {
        SpotCoefficients {
            base_case: base(),
            beta_base: 400.0,
            beta_dist: 1.5,
            beta_origin: [(r("C"), 120.0), (r("D"), -80.0)].into_iter().collect(),
            beta_dest: [(r("A"), 60.0), (r("C"), -30.0)].into_iter().collect(),
            beta_month: (2..=12).map(|m| (m, 10.0 * m as f64 - 40.0)).collect(),
            beta_year: [(2017, 75.0), (2018, 210.0)].into_iter().collect(),
        }
    }

    fn synth(n: usize, noise: f64, seed: u64) -> Vec<SpotObservation> {
        let t = truth();
        let origins = ["A", "C", "D"];
        let dests = ["A", "B", "C"];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let origin = r(origins[rng.gen_range(0..3)]);
                let dest = r(dests[rng.gen_range(0..3)]);
                let month = rng.gen_range(1..=12);
                let year = rng.gen_range(2016..=2018);
                let distance = rng.gen_range(260.0..2500.0);
                let mean = t.predict(&origin, &dest, month, year, distance).unwrap();
                let price = mean + noise * (rng.gen::<f64>() - 0.5) * mean / 1000.0;
                SpotObservation { origin, dest, month, year, distance, price }
            })
            .collect()
    }

    #[test]
    fn noiseless_data_recovers_coefficients() {
        let obs = synth(2000, 0.0, 1);
        let model = fit_spot_model(&obs, &base()).unwrap();
        let t = truth();
        let c = &model.coefficients;
        assert!((c.beta_base - t.beta_base).abs() < 1e-8);
        assert!((c.beta_dist - t.beta_dist).abs() < 1e-8);
        for (k, v) in &t.beta_origin {
            assert!((c.beta_origin[k] - v).abs() < 1e-8);
        }
        for (k, v) in &t.beta_dest {
            assert!((c.beta_dest[k] - v).abs() < 1e-8);
        }
        for (k, v) in &t.beta_month {
            assert!((c.beta_month[k] - v).abs() < 1e-8);
        }
        for (k, v) in &t.beta_year {
            assert!((c.beta_year[k] - v).abs() < 1e-8);
        }
        // homoskedastic noiseless fit: all robust SEs vanish
        for se in robust_standard_errors(&model).values() {
            assert!(*se < 1e-6, "se {se}");
        }
    }

    #[test]
    fn base_lane_only_matches_simple_regression() {
        let b = base();
        let pts = [(300.0, 900.0), (550.0, 1400.0), (800.0, 1500.0), (1200.0, 2300.0)];
        let obs: Vec<_> = pts
            .iter()
            .map(|&(d, p)| SpotObservation {
                origin: b.origin.clone(),
                dest: b.dest.clone(),
                month: 1,
                year: 2016,
                distance: d,
                price: p,
            })
            .collect();
        let model = fit_spot_model(&obs, &b).unwrap();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((model.coefficients.beta_dist - slope).abs() < 1e-9);
        assert!((model.coefficients.beta_base - (my - slope * mx)).abs() < 1e-7);
    }

    #[test]
    fn three_point_sandwich_matches_hand_calculation() {
        // x = (300, 400, 500), y = (1000, 1300, 1400): slope 2, intercept 1300/3,
        // residuals (-100/3, 200/3, -100/3). HC1 factor n/(n-p) = 3.
        // var(slope) = 3 * sum((x-xbar)^2 e^2) / Sxx^2 = 1/6
        // var(const) = 3 * sum(w^2 e^2), w = (7/3, 1/3, -5/3) -> 2340000/81
        let b = base();
        let obs: Vec<_> = [(300.0, 1000.0), (400.0, 1300.0), (500.0, 1400.0)]
            .iter()
            .map(|&(d, p)| SpotObservation {
                origin: b.origin.clone(),
                dest: b.dest.clone(),
                month: 1,
                year: 2016,
                distance: d,
                price: p,
            })
            .collect();
        let model = fit_spot_model(&obs, &b).unwrap();
        assert!((model.coefficients.beta_dist - 2.0).abs() < 1e-10);
        assert!((model.coefficients.beta_base - 1300.0 / 3.0).abs() < 1e-9);
        let se = robust_standard_errors(&model);
        assert!((se["distance"] - (1.0f64 / 6.0).sqrt()).abs() < 1e-9);
        assert!((se["const"] - (2340000.0f64 / 81.0).sqrt()).abs() < 1e-7);
        // off-diagonal: 3 * sum(w_i * v_i * e_i^2), v = (x - xbar)/Sxx
        let cov01 = 3.0 * ((7.0 / 3.0) * (-0.005) * (10000.0 / 9.0) + (-5.0 / 3.0) * 0.005 * (10000.0 / 9.0));
        assert!((model.robust_cov[0][1] - cov01).abs() < 1e-9);
    }

    /// Textbook sandwich with an explicit inverse, independent of the QR path.
    fn brute_force_hc1(obs: &[SpotObservation], model: &SpotModel) -> Vec<f64> {
        let levels = Levels::collect(obs, &model.coefficients.base_case).unwrap();
        let x = levels.design(obs);
        let (n, p) = x.shape();
        let beta = DVector::from_vec(model.estimates());
        let y = DVector::from_iterator(n, obs.iter().map(|o| o.price));
        let e = &y - &x * &beta;
        let bread = (x.transpose() * &x).try_inverse().unwrap();
        let mut meat = DMatrix::<f64>::zeros(p, p);
        for i in 0..n {
            let xi = x.row(i).transpose();
            meat += &xi * xi.transpose() * (e[i] * e[i]);
        }
        let cov = &bread * meat * &bread * (n as f64 / (n - p) as f64);
        (0..p).map(|j| cov[(j, j)].sqrt()).collect()
    }

    #[test]
    fn duplicating_observations_shrinks_ses_by_root_two() {
        let obs = synth(600, 200.0, 7);
        let model = fit_spot_model(&obs, &base()).unwrap();
        let mut doubled = obs.clone();
        doubled.extend(obs.iter().cloned());
        let model2 = fit_spot_model(&doubled, &base()).unwrap();

        let se1 = brute_force_hc1(&obs, &model);
        let se2 = brute_force_hc1(&doubled, &model2);
        let got1: Vec<f64> = model.coefficient_names.iter().map(|n| robust_standard_errors(&model)[n]).collect();
        let got2: Vec<f64> = model2.coefficient_names.iter().map(|n| robust_standard_errors(&model2)[n]).collect();
        let (n, p) = (obs.len() as f64, got1.len() as f64);
        // HC1 dof factor changes from n/(n-p) to 2n/(2n-p)
        let expected_ratio = (0.5 * (2.0 * n / (2.0 * n - p)) / (n / (n - p))).sqrt();
        for j in 0..got1.len() {
            assert!((got1[j] - se1[j]).abs() < 1e-8 * se1[j].max(1.0));
            assert!((got2[j] - se2[j]).abs() < 1e-8 * se2[j].max(1.0));
            let ratio = got2[j] / got1[j];
            assert!((ratio - expected_ratio).abs() < 1e-8, "ratio {ratio}");
            assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05);
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        let obs = synth(800, 300.0, 3);
        let model = fit_spot_model(&obs, &base()).unwrap();
        let levels = Levels::collect(&obs, &base()).unwrap();
        let x = levels.design(&obs);
        let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.price));
        let e = &y - &x * DVector::from_vec(model.estimates());
        let xte = x.tr_mul(&e);
        let scale = x.abs().max() * e.abs().max() * obs.len() as f64;
        assert!(xte.amax() < 1e-6 * scale.max(1.0));
    }

    #[test]
    fn predict_at_base_case_is_affine_in_distance() {
        let model = fit_spot_model(&synth(500, 100.0, 4), &base()).unwrap();
        let c = &model.coefficients;
        let b = base();
        for d in [300.0, 700.0, 1900.0] {
            let p = predict_spot(&model, &b.origin, &b.dest, 1, 2016, d).unwrap();
            assert!((p - (c.beta_base + c.beta_dist * d)).abs() < 1e-9);
        }
        let p1 = predict_spot(&model, &r("C"), &r("A"), 7, 2018, 500.0).unwrap();
        let p2 = predict_spot(&model, &r("C"), &r("A"), 7, 2018, 1500.0).unwrap();
        assert!(((p2 - p1) - 1000.0 * c.beta_dist).abs() < 1e-8);
    }

    #[test]
    fn intercept_only_model_predicts_constant() {
        let coefs = SpotCoefficients {
            base_case: base(),
            beta_base: 1000.0,
            beta_dist: 0.0,
            beta_origin: [(r("C"), 0.0)].into_iter().collect(),
            beta_dest: [(r("A"), 0.0)].into_iter().collect(),
            beta_month: (2..=12).map(|m| (m, 0.0)).collect(),
            beta_year: BTreeMap::new(),
        };
        assert_eq!(coefs.predict(&r("C"), &r("A"), 5, 2016, 1234.0).unwrap(), 1000.0);
        assert_eq!(coefs.predict(&r("A"), &r("B"), 1, 2016, 400.0).unwrap(), 1000.0);
    }

    #[test]
    fn unseen_levels_are_errors() {
        let model = fit_spot_model(&synth(500, 100.0, 5), &base()).unwrap();
        for (o, d, m, y) in [("Z", "B", 1, 2016), ("A", "Z", 1, 2016), ("A", "B", 1, 2030)] {
            assert!(matches!(
                predict_spot(&model, &r(o), &r(d), m, y, 500.0),
                Err(Error::UnknownLevel { .. })
            ));
        }
    }

    #[test]
    fn missing_base_level_is_insufficient_data() {
        let obs: Vec<_> = synth(300, 0.0, 6).into_iter().filter(|o| o.year != 2016).collect();
        assert!(matches!(
            fit_spot_model(&obs, &base()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn confounded_levels_are_a_singular_design() {
        // origin C only ever ships to dest C, so the two indicators coincide.
        let obs: Vec<_> = synth(800, 50.0, 8)
            .into_iter()
            .filter(|o| (o.origin.code() == "C") == (o.dest.code() == "C"))
            .collect();
        match fit_spot_model(&obs, &base()) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["dest:C"]),
            other => panic!("expected singular design, got {:?}", other.map(|m| m.n_obs)),
        }
    }

    #[test]
    fn json_round_trip() {
        let model = fit_spot_model(&synth(300, 100.0, 9), &base()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spot.json");
        model.save(&path).unwrap();
        assert_eq!(SpotModel::load(&path).unwrap(), model);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn permutation_and_price_shift_properties(seed in 0u64..1000, shift in -500.0f64..500.0) {
            let obs = synth(300, 150.0, seed);
            let model = fit_spot_model(&obs, &base()).unwrap();

            let mut shuffled = obs.clone();
            shuffled.reverse();
            shuffled.rotate_left((seed % 17) as usize);
            let permuted = fit_spot_model(&shuffled, &base()).unwrap();
            for (a, b) in model.estimates().iter().zip(permuted.estimates()) {
                prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }

            let moved: Vec<_> = obs.iter().cloned().map(|mut o| { o.price += shift + 2000.0; o }).collect();
            let shifted = fit_spot_model(&moved, &base()).unwrap();
            let (a, b) = (model.estimates(), shifted.estimates());
            prop_assert!((b[0] - a[0] - shift - 2000.0).abs() < 1e-7);
            for j in 1..a.len() {
                prop_assert!((a[j] - b[j]).abs() < 1e-7, "coef {} moved", j);
            }
        }
    }
}
