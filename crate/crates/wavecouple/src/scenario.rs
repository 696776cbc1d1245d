//! Scenario files: flat `key = value` lines, `#` comments, dotted keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupling::Coupling;
use crate::data::{self, EndpointData, SpatialFn};
use crate::error::{Error, Result};
use crate::field::Grid;
use crate::geometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingKind {
    /// f1 = 0, f2 = u^3
    Cubic,
    /// f1 = 0, f2 = c u + u^3
    CubicPlusLinear,
    /// f1 = 0, f2 = c u
    Linear,
}

impl CouplingKind {
    fn name(&self) -> &'static str {
        match self {
            CouplingKind::Cubic => "cubic",
            CouplingKind::CubicPlusLinear => "cubic_plus_linear",
            CouplingKind::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Zero,
    Sine { m: u32, amplitude: f64 },
    Bump { center: f64, width: f64, amplitude: f64 },
    /// CSV with header x,u0,u1,v0,v1,u0f,u1f,v0f,v1f on uniform nodes of [0, L]
    File { path: PathBuf },
    /// u0 and v0 random combinations of the first `modes` sine modes
    Random { modes: u32, amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub newton_u: f64,
    pub newton_v: f64,
    pub compat: f64,
    pub final_slice: f64,
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { newton_u: 1e-7, newton_v: 1e-7, compat: 1e-9, final_slice: 1e-5, support: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nu1: f64,
    pub nu2: f64,
    pub l: f64,
    pub t_end: f64,
    pub a: f64,
    pub b: f64,
    pub coupling: CouplingKind,
    pub coupling_c: f64,
    /// None picks the smallest nt with CFL number at most `cfl`
    pub nt: Option<usize>,
    pub nx: usize,
    pub cfl: f64,
    pub delta: f64,
    pub epsilon0: f64,
    pub kappa: f64,
    pub eta: usize,
    pub jet_order: usize,
    pub compat_order: usize,
    pub tol: Tolerances,
    pub newton_max_iter: usize,
    /// local radius of the global scaling step
    pub radius: f64,
    /// linearize around the return trajectory; false gives the path through rest
    pub return_triple: bool,
    pub data: DataSpec,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            nu1: 10.0,
            nu2: 10.0,
            l: 1.6,
            t_end: 3.0,
            a: 0.05,
            b: 1.55,
            coupling: CouplingKind::Cubic,
            coupling_c: 1.0,
            nt: None,
            nx: 673,
            cfl: 0.9,
            delta: 0.5,
            epsilon0: 0.12,
            kappa: 10.0,
            eta: 64,
            jet_order: crate::profiles::temporal::DEFAULT_ORDER,
            compat_order: crate::compat::DEFAULT_ORDER,
            tol: Tolerances::default(),
            newton_max_iter: 25,
            radius: 0.25,
            return_triple: true,
            data: DataSpec::Sine { m: 1, amplitude: 1e-3 },
            seed: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("key '{key}': cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("key '{key}': expected true or false, got '{v}'"))),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", ln + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", ln + 1)));
            }
            if kv.insert(k.to_string(), (ln + 1, v.trim().to_string())).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key '{k}'", ln + 1)));
            }
        }
        let mut s = Scenario::default();
        let mut take = |k: &str| kv.remove(k).map(|(_, v)| v);
        macro_rules! num {
            ($key:expr, $field:expr) => {
                if let Some(v) = take($key) {
                    $field = parse_num($key, &v)?;
                }
            };
        }
        num!("nu1", s.nu1);
        num!("nu2", s.nu2);
        num!("L", s.l);
        num!("T", s.t_end);
        num!("a", s.a);
        num!("b", s.b);
        if let Some(v) = take("coupling") {
            s.coupling = match v.as_str() {
                "cubic" => CouplingKind::Cubic,
                "cubic_plus_linear" => CouplingKind::CubicPlusLinear,
                "linear" => CouplingKind::Linear,
                _ => return Err(Error::Parse(format!("unknown coupling '{v}'"))),
            };
        }
        num!("coupling.c", s.coupling_c);
        if let Some(v) = take("grid.nt") {
            s.nt = if v == "auto" { None } else { Some(parse_num("grid.nt", &v)?) };
        }
        num!("grid.nx", s.nx);
        num!("grid.cfl", s.cfl);
        num!("delta", s.delta);
        num!("epsilon0", s.epsilon0);
        num!("kappa", s.kappa);
        num!("eta", s.eta);
        num!("jet_order", s.jet_order);
        num!("compat_order", s.compat_order);
        num!("tol.newton_u", s.tol.newton_u);
        num!("tol.newton_v", s.tol.newton_v);
        num!("tol.compat", s.tol.compat);
        num!("tol.final_slice", s.tol.final_slice);
        num!("tol.support", s.tol.support);
        num!("newton.max_iter", s.newton_max_iter);
        num!("global.radius", s.radius);
        if let Some(v) = take("return_triple") {
            s.return_triple = parse_bool("return_triple", &v)?;
        }
        num!("seed", s.seed);
        let family = take("data.family").unwrap_or_else(|| "sine".into());
        let mut f = |k: &str, d: f64| -> Result<f64> { take(k).map_or(Ok(d), |v| parse_num(k, &v)) };
        s.data = match family.as_str() {
            "zero" => DataSpec::Zero,
            "sine" => DataSpec::Sine { m: f("data.m", 1.0)? as u32, amplitude: f("data.amplitude", 1e-3)? },
            "bump" => DataSpec::Bump {
                center: f("data.center", 0.5 * s.l)?,
                width: f("data.width", 0.25 * s.l)?,
                amplitude: f("data.amplitude", 1e-3)?,
            },
            "random" => DataSpec::Random { modes: f("data.modes", 4.0)? as u32, amplitude: f("data.amplitude", 1e-3)? },
            "file" => {
                let p = take("data.path").ok_or_else(|| Error::Parse("data.family = file needs data.path".into()))?;
                DataSpec::File { path: PathBuf::from(p) }
            }
            _ => return Err(Error::Parse(format!("unknown data family '{family}'"))),
        };
        if let Some((k, (ln, _))) = kv.iter().next() {
            return Err(Error::Parse(format!("line {ln}: unknown key '{k}' for this scenario")));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut s = Scenario::parse(&text)?;
        // relative data paths are taken from the scenario's directory
        if let DataSpec::File { path: p } = &mut s.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let mut put = |k: &str, v: String| o.push_str(&format!("{k} = {v}\n"));
        put("nu1", self.nu1.to_string());
        put("nu2", self.nu2.to_string());
        put("L", self.l.to_string());
        put("T", self.t_end.to_string());
        put("a", self.a.to_string());
        put("b", self.b.to_string());
        put("coupling", self.coupling.name().into());
        put("coupling.c", self.coupling_c.to_string());
        put("grid.nt", self.nt.map_or("auto".into(), |n| n.to_string()));
        put("grid.nx", self.nx.to_string());
        put("grid.cfl", self.cfl.to_string());
        put("delta", self.delta.to_string());
        put("epsilon0", self.epsilon0.to_string());
        put("kappa", self.kappa.to_string());
        put("eta", self.eta.to_string());
        put("jet_order", self.jet_order.to_string());
        put("compat_order", self.compat_order.to_string());
        put("tol.newton_u", self.tol.newton_u.to_string());
        put("tol.newton_v", self.tol.newton_v.to_string());
        put("tol.compat", self.tol.compat.to_string());
        put("tol.final_slice", self.tol.final_slice.to_string());
        put("tol.support", self.tol.support.to_string());
        put("newton.max_iter", self.newton_max_iter.to_string());
        put("global.radius", self.radius.to_string());
        put("return_triple", self.return_triple.to_string());
        put("seed", self.seed.to_string());
        match &self.data {
            DataSpec::Zero => put("data.family", "zero".into()),
            DataSpec::Sine { m, amplitude } => {
                put("data.family", "sine".into());
                put("data.m", m.to_string());
                put("data.amplitude", amplitude.to_string());
            }
            DataSpec::Bump { center, width, amplitude } => {
                put("data.family", "bump".into());
                put("data.center", center.to_string());
                put("data.width", width.to_string());
                put("data.amplitude", amplitude.to_string());
            }
            DataSpec::Random { modes, amplitude } => {
                put("data.family", "random".into());
                put("data.modes", modes.to_string());
                put("data.amplitude", amplitude.to_string());
            }
            DataSpec::File { path } => {
                put("data.family", "file".into());
                put("data.path", path.display().to_string());
            }
        }
        o
    }

    /// Checks the invariants that do not need any construction.
    pub fn validate(&self) -> Result<()> {
        let pos = [self.nu1, self.nu2, self.l, self.t_end, self.cfl, self.delta, self.epsilon0, self.kappa, self.radius];
        if pos.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::OutOfDomain("nu1, nu2, L, T, grid.cfl, delta, epsilon0, kappa and global.radius must be positive".into()));
        }
        if !(0.0 <= self.a && self.a < self.b && self.b <= self.l) {
            return Err(Error::OutOfDomain(format!("need 0 <= a < b <= L, got a = {}, b = {}", self.a, self.b)));
        }
        let t = &self.tol;
        if [t.newton_u, t.newton_v, t.compat, t.final_slice, t.support].iter().any(|x| !(*x > 0.0)) {
            return Err(Error::OutOfDomain("all tolerances must be positive".into()));
        }
        if self.nx < 8 {
            return Err(Error::OutOfDomain(format!("grid.nx = {} is too small", self.nx)));
        }
        if !geometry::check_time(self.t_end, self.l, self.a, self.b, self.nu1, self.nu2) {
            return Err(Error::TimeTooShort(format!(
                "T = {} fails T > 2 max(a, L - b) / min(nu1, nu2)",
                self.t_end
            )));
        }
        Ok(())
    }

    pub fn coupling(&self) -> Coupling {
        match self.coupling {
            CouplingKind::Cubic => Coupling::cubic(),
            CouplingKind::CubicPlusLinear => Coupling::cubic_plus_linear(self.coupling_c),
            CouplingKind::Linear => Coupling::linear(self.coupling_c),
        }
    }

    /// Grid refined `levels` times; nt follows the CFL target when auto.
    pub fn grid(&self, levels: u32) -> Result<Grid> {
        let nx = (self.nx - 1) * (1 << levels) + 1;
        let dx = self.l / (nx - 1) as f64;
        let nu = self.nu1.max(self.nu2);
        let nt = match self.nt {
            Some(nt) => (nt - 1) * (1 << levels) + 1,
            None => (self.t_end * nu / (self.cfl * dx)).ceil() as usize + 1,
        };
        Grid::new(self.t_end, self.l, nt, nx)
    }

    pub fn endpoint_data(&self) -> Result<EndpointData> {
        let l = self.l;
        Ok(match &self.data {
            DataSpec::Zero => EndpointData::zero(l),
            DataSpec::Sine { m, amplitude } => EndpointData::sine_mode(l, *m, *amplitude),
            DataSpec::Bump { center, width, amplitude } => EndpointData::bump(l, *center, *width, *amplitude),
            DataSpec::Random { modes, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut pick = || -> SpatialFn {
                    let mut f = data::zero();
                    for m in 1..=*modes {
                        let c: f64 = rng.gen_range(-1.0..1.0);
                        f = data::sum(&f, &data::sine(m, c * amplitude / *modes as f64, l));
                    }
                    f
                };
                let (u0, v0) = (pick(), pick());
                EndpointData { u0, v0, ..EndpointData::zero(l) }
            }
            DataSpec::File { path } => read_data_file(path, l)?,
        })
    }
}

const DATA_COLUMNS: [&str; 9] = ["x", "u0", "u1", "v0", "v1", "u0f", "u1f", "v0f", "v1f"];

fn read_data_file(path: &Path, l: f64) -> Result<EndpointData> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != DATA_COLUMNS {
        return Err(Error::Parse(format!("{}: header must be {}", path.display(), DATA_COLUMNS.join(","))));
    }
    let mut cols: Vec<Vec<f64>> = vec![vec![]; 9];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        for (c, v) in cols.iter_mut().zip(rec.iter()) {
            c.push(parse_num("data file", v.trim())?);
        }
    }
    let n = cols[0].len();
    if n < 4 {
        return Err(Error::Parse(format!("{}: need at least 4 rows", path.display())));
    }
    let dx = l / (n - 1) as f64;
    if cols[0].iter().enumerate().any(|(j, &x)| (x - j as f64 * dx).abs() > 1e-9 * l) {
        return Err(Error::Parse(format!("{}: x must be the uniform nodes of [0, {l}]", path.display())));
    }
    let f = |i: usize| data::sampled(cols[i].clone(), dx);
    Ok(EndpointData { l, u0: f(1), u1: f(2), v0: f(3), v1: f(4), u0f: f(5), u1f: f(6), v0f: f(7), v1f: f(8) })
}
