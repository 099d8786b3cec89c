//! Dispatch of a validated config to the numerical core.

use serde::Serialize;
use serde_json::{json, Value};

use kubo_core::bloch::zone_distance;
use kubo_core::ed::{
    continuity_check, continuity_check_corrupted, half_filling_check, lehmann_correlator, sigma_interacting,
    u_scan, wick_rotation_check, Boundary, DensityKernel, EdModel, GibbsState,
};
use kubo_core::geometry::honeycomb_fermi_points;
use kubo_core::linalg::eigvalsh;
use kubo_core::response::{
    fhs_chern, kubo_correlator_free, kubo_sigma, kubo_vs_tknn, tknn_sigma12, torus_spectrum, Mat2,
};
use kubo_core::{
    fermi_points, spectral_gap, Beta, BlochHamiltonian, BzMesh, ConductivityTensor, CorrelatorSeries, LatticeSpec,
    Refinement, Units, Vec2,
};

use crate::config::{
    BoundaryKind, Computation, EnergyScale, InteractionKind, LatticePreset, ModelPreset, RunConfig, UnitsFlag,
};
use crate::error::CliError;

/// Inverse temperature used by exact diagonalization when none is configured.
pub const DEFAULT_ED_BETA: f64 = 20.0;
/// Mesh used to locate Fermi points before refinement.
const FERMI_SEARCH_N: usize = 60;
/// Largest distance to the spectrum accepted for a Fermi point.
const FERMI_TOL: f64 = 1e-2;
/// Many-body free-fermion comparison is skipped above this mode count.
const FREE_COMPARISON_MAX_MODES: usize = 20;

/// A named numeric table, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal, in exponent form for very small or large magnitudes.
fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Outcome of one computation: the data payload, tables and headline scalars.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub computation: Computation,
    pub config: RunConfig,
    pub summary: Value,
    pub tables: Vec<Table>,
    /// Headline numbers in a fixed order, used by convergence sweeps.
    pub scalars: Vec<(String, f64)>,
}

impl RunResult {
    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// The deterministic JSON document: config echo, units and results only.
    pub fn summary_json(&self) -> String {
        let doc = json!({
            "computation": self.computation.name(),
            "config": self.config.to_toml(),
            "units": units_name(self.config.output.units),
            "result": self.summary,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn units(cfg: &RunConfig) -> Units {
    match cfg.output.units {
        UnitsFlag::Natural => Units::Natural,
        UnitsFlag::E2h => Units::E2OverH,
    }
}

fn units_name(u: UnitsFlag) -> &'static str {
    match u {
        UnitsFlag::Natural => "natural",
        UnitsFlag::E2h => "e2h",
    }
}

fn beta_json(beta: f64) -> Value {
    if beta.is_finite() {
        json!(beta)
    } else {
        json!("inf")
    }
}

fn tensor_json(t: &ConductivityTensor, u: Units) -> Value {
    let t = t.to_units(u);
    json!({ "sigma": t.sigma(), "uncertainty": t.uncertainty(), "units": t.units })
}

fn flat4(m: &Mat2) -> [f64; 4] {
    [m[0][0], m[0][1], m[1][0], m[1][1]]
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

/// The Bloch Hamiltonian of the configured model, with its spin degeneracy.
pub fn bloch_model(cfg: &RunConfig) -> Result<BlochHamiltonian, CliError> {
    let p = |k: &str| cfg.model.param(k);
    let h = match cfg.model.preset {
        ModelPreset::Graphene => BlochHamiltonian::graphene(p("t"))?,
        ModelPreset::Haldane => BlochHamiltonian::haldane(p("t1"), p("t2"), p("phi"), p("m"))?,
        ModelPreset::Flat => {
            let g = p("gap");
            BlochHamiltonian::flat(&[-g / 2.0, g / 2.0])?
        }
    };
    Ok(h.with_spin_degeneracy(p("spin_degeneracy")))
}

fn unit_cell(h: &BlochHamiltonian) -> Result<LatticeSpec, CliError> {
    Ok(h.lattice(1, false)?)
}

/// Fermi points of `h` at `mu`, snapped to the exact Dirac points on the
/// honeycomb lattice.
pub fn refinement_centers(cfg: &RunConfig, h: &BlochHamiltonian) -> Result<Vec<Vec2>, CliError> {
    let lat = unit_cell(h)?;
    let coarse = BzMesh::new(&lat, FERMI_SEARCH_N, None)?;
    let mut pts = fermi_points(h, cfg.numerics.mu, &coarse, FERMI_TOL)?;
    if cfg.lattice.preset == LatticePreset::Honeycomb {
        for p in pts.iter_mut() {
            if let Some(k) = honeycomb_fermi_points().into_iter().find(|k| zone_distance(&lat, p, k) < FERMI_TOL) {
                *p = k;
            }
        }
    }
    Ok(pts)
}

fn free_mesh(cfg: &RunConfig, h: &BlochHamiltonian) -> Result<(BzMesh, Vec<Vec2>), CliError> {
    let lat = unit_cell(h)?;
    let centers = refinement_centers(cfg, h)?;
    let depth = cfg.numerics.refinement_depth;
    let refine = (!centers.is_empty() && depth > 0).then(|| Refinement { centers: centers.clone(), depth });
    Ok((BzMesh::new(&lat, cfg.numerics.mesh_n, refine.as_ref())?, centers))
}

/// `1` for absolute energies, the bulk gap `delta_mu` otherwise.
pub fn energy_unit(cfg: &RunConfig) -> Result<f64, CliError> {
    match cfg.numerics.energy_scale {
        EnergyScale::Absolute => Ok(1.0),
        EnergyScale::Gap => {
            let h = bloch_model(cfg)?;
            let mesh = BzMesh::new(&unit_cell(&h)?, cfg.numerics.gap_mesh_n, None)?;
            let gap = spectral_gap(&h, cfg.numerics.mu, &mesh)?.delta_mu;
            if gap <= 1e-9 {
                return Err(CliError::Compute(kubo_core::Error::Gapless {
                    mu: cfg.numerics.mu,
                    delta: gap,
                    mesh_n: cfg.numerics.gap_mesh_n,
                }));
            }
            Ok(gap)
        }
    }
}

fn ed_beta(cfg: &RunConfig) -> Result<f64, CliError> {
    let b = cfg.numerics.beta.unwrap_or(DEFAULT_ED_BETA);
    if !b.is_finite() {
        return Err(CliError::Config("numerics.beta: exact diagonalization needs a finite beta".into()));
    }
    Ok(b)
}

/// The exact-diagonalization model of `cfg` at linear size `size` and coupling `u`.
pub fn ed_model(cfg: &RunConfig, size: usize, u: f64) -> Result<EdModel, CliError> {
    let h = bloch_model(cfg)?.with_spin_degeneracy(1.0);
    let kernel = match cfg.interaction_kind() {
        InteractionKind::None => None,
        InteractionKind::Hubbard => Some(DensityKernel::hubbard(h.dim())),
        InteractionKind::NearestNeighbour => Some(DensityKernel::honeycomb_nearest_neighbour()),
    };
    let boundary = match cfg.lattice.boundary {
        BoundaryKind::Periodic => Boundary::Periodic,
        BoundaryKind::Open => Boundary::Open,
    };
    Ok(EdModel::new(
        &h,
        size,
        cfg.lattice.spinful,
        boundary,
        kernel.as_ref(),
        u,
        cfg.numerics.particles.as_deref(),
    )?)
}

fn correlator_table(name: &str, series: &CorrelatorSeries, lead: Option<f64>, table: Option<Table>) -> Table {
    let mut t = table.unwrap_or_else(|| {
        let mut head = vec![];
        if lead.is_some() {
            head.push("u");
        }
        head.extend([
            "omega", "re_k11", "im_k11", "re_k12", "im_k12", "re_k21", "im_k21", "re_k22", "im_k22",
        ]);
        Table::new(name, &head)
    });
    for (w, k) in series.omegas.iter().zip(&series.values) {
        let mut row: Vec<f64> = lead.into_iter().collect();
        row.push(*w);
        for z in k.iter().flatten() {
            row.push(z.re);
            row.push(z.im);
        }
        t.rows.push(row);
    }
    t
}

/// Runs the configured computation (default: conductivity).
pub fn run(cfg: &RunConfig) -> Result<RunResult, CliError> {
    let computation = cfg.computation.unwrap_or(Computation::Conductivity);
    let mut cfg = cfg.clone();
    cfg.computation = Some(computation);
    cfg.validate()?;
    let (summary, tables, scalars) = match computation {
        Computation::Conductivity => conductivity(&cfg)?,
        Computation::Chern => chern(&cfg)?,
        Computation::KuboVsTknn => kubo_tknn(&cfg)?,
        Computation::EdSpectrum => ed_spectrum(&cfg)?,
        Computation::EdConductivity => ed_conductivity(&cfg)?,
        Computation::EdUstability => ed_ustability(&cfg)?,
        Computation::WickCheck => wick_check(&cfg)?,
        Computation::WardCheck => ward_check(&cfg)?,
    };
    Ok(RunResult { computation, config: cfg, summary, tables, scalars })
}

type Parts = (Value, Vec<Table>, Vec<(String, f64)>);

fn conductivity(cfg: &RunConfig) -> Result<Parts, CliError> {
    let h = bloch_model(cfg)?;
    let (mesh, centers) = free_mesh(cfg, &h)?;
    let beta = Beta::from_f64(cfg.numerics.beta.unwrap_or(f64::INFINITY));
    let series = kubo_correlator_free(&h, cfg.numerics.mu, beta, &mesh, &cfg.numerics.omegas)?;
    let sigma = kubo_sigma(&series)?;
    let u = units(cfg);
    let shown = sigma.to_units(u).sigma();
    let fit = sigma.extrapolation.as_ref().expect("fit records its extrapolation");

    let mut quotients = Table::new("quotients", &["omega", "q11", "q12", "q21", "q22"]);
    for (w, q) in &fit.quotients {
        let mut row = vec![*w];
        row.extend(flat4(q));
        quotients.rows.push(row);
    }
    let summary = json!({
        "model": h.tag(),
        "spin_degeneracy": h.spin_degeneracy(),
        "mu": cfg.numerics.mu,
        "beta": beta_json(beta.value()),
        "mesh": {
            "base_n": mesh.base_n(),
            "refinement_depth": mesh.depth(),
            "points": mesh.len(),
            "refinement_centers": centers.iter().map(|k| [k.x, k.y]).collect::<Vec<_>>(),
        },
        "conductivity": tensor_json(&sigma, u),
        "fit": { "units": "natural", "extrapolation": to_json(fit) },
    });
    let mut scalars: Vec<(String, f64)> = ["sigma11", "sigma12", "sigma21", "sigma22"]
        .iter()
        .zip(flat4(&shown))
        .map(|(n, v)| (n.to_string(), v))
        .collect();
    scalars.push(("log_coefficient11".into(), fit.log_coefficient[0][0]));
    scalars.push(("log_uncertainty11".into(), fit.log_uncertainty[0][0]));
    Ok((summary, vec![correlator_table("correlator", &series, None, None), quotients], scalars))
}

fn chern(cfg: &RunConfig) -> Result<Parts, CliError> {
    let h = bloch_model(cfg)?;
    let report = fhs_chern(&h, cfg.numerics.mu, cfg.numerics.chern_n)?;
    let hall = tknn_sigma12(&report);
    let u = units(cfg);
    let s12 = hall.to_units(u).sigma()[0][1];
    let summary = json!({
        "model": h.tag(),
        "mu": cfg.numerics.mu,
        "chern": report.chern,
        "report": to_json(&report),
        "hall_conductivity": tensor_json(&hall, u),
    });
    let scalars = vec![("chern".into(), report.chern as f64), ("sigma12".into(), s12)];
    Ok((summary, vec![], scalars))
}

fn kubo_tknn(cfg: &RunConfig) -> Result<Parts, CliError> {
    let h = bloch_model(cfg)?;
    let (mesh, _) = free_mesh(cfg, &h)?;
    let c = kubo_vs_tknn(&h, cfg.numerics.mu, &mesh, &cfg.numerics.omegas, cfg.numerics.chern_n)?;
    let u = units(cfg);
    let summary = json!({
        "model": h.tag(),
        "mu": cfg.numerics.mu,
        "mesh_points": mesh.len(),
        "chern": c.chern.chern,
        "kubo": tensor_json(&c.kubo, u),
        "tknn": tensor_json(&c.tknn, u),
        "discrepancy": { "values": c.discrepancy, "units": Units::E2OverH },
        "chern_report": to_json(&c.chern),
    });
    let scalars = vec![
        ("kubo_sigma12".into(), c.kubo.to_units(u).sigma()[0][1]),
        ("chern".into(), c.chern.chern as f64),
        ("discrepancy12".into(), c.discrepancy[0][1]),
    ];
    Ok((summary, vec![], scalars))
}

/// Free many-body spectrum of the same sectors, from single-particle levels.
fn free_many_body(cfg: &RunConfig, model: &EdModel) -> Result<Vec<Vec<f64>>, CliError> {
    let h = bloch_model(cfg)?.with_spin_degeneracy(1.0);
    let levels = torus_spectrum(&h, cfg.lattice.size)?;
    let spins = model.lattice().spin_components();
    let mut single: Vec<f64> = levels.iter().flat_map(|&e| std::iter::repeat_n(e, spins)).collect();
    single.sort_by(f64::total_cmp);
    Ok(model
        .space()
        .sectors()
        .iter()
        .map(|s| {
            let mut e: Vec<f64> = s
                .states()
                .iter()
                .map(|&bits| (0..single.len()).filter(|m| (bits >> m) & 1 == 1).map(|m| single[m]).sum())
                .collect();
            e.sort_by(f64::total_cmp);
            e
        })
        .collect())
}

fn ed_spectrum(cfg: &RunConfig) -> Result<Parts, CliError> {
    let scale = energy_unit(cfg)?;
    let u = cfg.numerics.couplings[0] * scale;
    let model = ed_model(cfg, cfg.lattice.size, u)?;
    let h = model.hamiltonian()?;
    let mut table = Table::new("spectrum", &["particles", "energy"]);
    let mut per_sector = Vec::new();
    for (sector, block) in model.space().sectors().iter().zip(h.blocks()) {
        let e = eigvalsh(block.clone());
        for &v in &e {
            table.rows.push(vec![sector.particles() as f64, v]);
        }
        per_sector.push(e);
    }
    let ground = per_sector.iter().flatten().copied().fold(f64::INFINITY, f64::min);

    let free_deviation = if u == 0.0
        && cfg.lattice.boundary == BoundaryKind::Periodic
        && model.n_modes() <= FREE_COMPARISON_MAX_MODES
    {
        let free = free_many_body(cfg, &model)?;
        let d = per_sector
            .iter()
            .zip(&free)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        Some(d)
    } else {
        None
    };

    let mut summary = json!({
        "model": model.tag(),
        "size": cfg.lattice.size,
        "coupling": u,
        "n_modes": model.n_modes(),
        "dimension": model.space().dim(),
        "sectors": model.space().sectors().iter().map(|s| s.particles()).collect::<Vec<_>>(),
        "ground_energy": ground,
        "free_fermion_deviation": free_deviation,
    });
    let mut scalars = vec![("ground_energy".to_string(), ground)];
    if model.space().is_complete() {
        let beta = ed_beta(cfg)?;
        let state = GibbsState::new(&h, &model, beta, cfg.numerics.mu)?;
        let density = state.expectation(&model.number_operator()).re / model.n_modes() as f64;
        summary["thermal"] = json!({
            "beta": beta,
            "mu": cfg.numerics.mu,
            "log_partition": state.log_partition(),
            "gap": state.gap(),
            "density": density,
        });
        scalars.push(("gap".into(), state.gap()));
    }
    if let Some(d) = free_deviation {
        scalars.push(("free_fermion_deviation".into(), d));
    }
    Ok((summary, vec![table], scalars))
}

fn ed_conductivity(cfg: &RunConfig) -> Result<Parts, CliError> {
    let scale = energy_unit(cfg)?;
    let beta = ed_beta(cfg)?;
    let mu = cfg.numerics.mu;
    let un = units(cfg);
    let mut correlators: Option<Table> = None;
    let mut sigma_table = Table::new(
        "conductivity",
        &["u", "sigma11", "sigma12", "sigma21", "sigma22", "unc11", "unc12", "unc21", "unc22"],
    );
    let mut points = Vec::new();
    let mut scalars = Vec::new();
    for (idx, &c) in cfg.numerics.couplings.iter().enumerate() {
        let u = c * scale;
        let model = ed_model(cfg, cfg.lattice.size, u)?;
        let sigma = sigma_interacting(&model, beta, mu, &cfg.numerics.omegas)?;
        let state = GibbsState::new(&model.hamiltonian()?, &model, beta, mu)?;
        let series = lehmann_correlator(&model, &state, &cfg.numerics.omegas)?;
        correlators = Some(correlator_table("correlator", &series, Some(u), correlators));
        let t = sigma.to_units(un);
        let mut row = vec![u];
        row.extend(flat4(&t.sigma()));
        row.extend(flat4(&t.uncertainty()));
        sigma_table.rows.push(row);
        scalars.push((format!("sigma11_{idx}"), t.sigma()[0][0]));
        scalars.push((format!("sigma12_{idx}"), t.sigma()[0][1]));
        points.push(json!({
            "u": u,
            "gap": state.gap(),
            "conductivity": tensor_json(&sigma, un),
            "fit": { "units": "natural", "extrapolation": to_json(&sigma.extrapolation) },
        }));
    }
    let summary = json!({
        "size": cfg.lattice.size,
        "beta": beta,
        "mu": mu,
        "energy_unit": scale,
        "points": points,
    });
    let mut tables = vec![sigma_table];
    tables.extend(correlators);
    Ok((summary, tables, scalars))
}

fn ed_ustability(cfg: &RunConfig) -> Result<Parts, CliError> {
    let scale = energy_unit(cfg)?;
    let beta = ed_beta(cfg)?;
    let f = units(cfg).from_natural();
    let couplings: Vec<f64> = cfg.numerics.couplings.iter().map(|c| c * scale).collect();
    let mut table = Table::new("ustability", &["size", "u", "u_over_unit", "sigma12", "deviation"]);
    let mut points = Vec::new();
    let mut scalars = Vec::new();
    for &size in &cfg.numerics.sizes {
        let model = ed_model(cfg, size, 0.0)?;
        let scan = u_scan(&model, &couplings, beta, cfg.numerics.mu, &cfg.numerics.omegas)?;
        for (p, &c) in scan.iter().zip(&cfg.numerics.couplings) {
            table.rows.push(vec![size as f64, p.u, c, p.sigma12 * f, p.deviation * f]);
            scalars.push((format!("deviation_{}", scalars.len()), p.deviation * f));
            points.push(json!({
                "size": size,
                "u": p.u,
                "u_over_unit": c,
                "sigma12": p.sigma12 * f,
                "deviation": p.deviation * f,
            }));
        }
    }
    let summary = json!({
        "beta": beta,
        "mu": cfg.numerics.mu,
        "energy_unit": scale,
        "units": units(cfg),
        "points": points,
    });
    Ok((summary, vec![table], scalars))
}

fn wick_check(cfg: &RunConfig) -> Result<Parts, CliError> {
    let scale = energy_unit(cfg)?;
    let beta = ed_beta(cfg)?;
    let omega = cfg.numerics.wick_omega * scale;
    let t_max = cfg.numerics.t_max.unwrap_or((1e10f64).ln() / omega);
    let mut table = Table::new("wick", &["u", "i", "j", "imaginary_time_ji", "real_time_ij", "difference"]);
    let mut points = Vec::new();
    let mut scalars = Vec::new();
    for (idx, &c) in cfg.numerics.couplings.iter().enumerate() {
        let u = c * scale;
        let model = ed_model(cfg, cfg.lattice.size, u)?;
        let w = wick_rotation_check(&model, beta, cfg.numerics.mu, t_max, omega)?;
        for i in 0..2 {
            for j in 0..2 {
                table.rows.push(vec![u, i as f64 + 1.0, j as f64 + 1.0, w.imaginary_time[j][i], w.real_time[i][j], w.difference[i][j]]);
            }
        }
        let worst = w.difference.iter().flatten().copied().fold(0.0, f64::max);
        scalars.push((format!("max_difference_{idx}"), worst));
        points.push(json!({ "u": u, "max_difference": worst, "comparison": to_json(&w) }));
    }
    let summary = json!({
        "size": cfg.lattice.size,
        "boundary": cfg.lattice.boundary,
        "beta": beta,
        "mu": cfg.numerics.mu,
        "omega": omega,
        "t_max": t_max,
        "energy_unit": scale,
        "units": "natural",
        "points": points,
    });
    Ok((summary, vec![table], scalars))
}

fn ward_check(cfg: &RunConfig) -> Result<Parts, CliError> {
    let scale = energy_unit(cfg)?;
    let mut table = Table::new("ward", &["u", "max_residual", "max_rate", "corrupted_residual", "density"]);
    let mut points = Vec::new();
    let mut scalars = Vec::new();
    for (idx, &c) in cfg.numerics.couplings.iter().enumerate() {
        let u = c * scale;
        let model = ed_model(cfg, cfg.lattice.size, u)?;
        let ok = continuity_check(&model)?;
        let bad = continuity_check_corrupted(&model)?;
        let density = if model.space().is_complete() {
            Some(half_filling_check(&model, ed_beta(cfg)?, cfg.numerics.mu)?)
        } else {
            None
        };
        table.rows.push(vec![u, ok.max_residual, ok.max_rate, bad.max_residual, density.unwrap_or(f64::NAN)]);
        scalars.push((format!("max_residual_{idx}"), ok.max_residual));
        points.push(json!({
            "u": u,
            "continuity": to_json(&ok),
            "negative_control": to_json(&bad),
            "density": density,
        }));
    }
    let summary = json!({
        "size": cfg.lattice.size,
        "spinful": cfg.lattice.spinful,
        "energy_unit": scale,
        "points": points,
    });
    Ok((summary, vec![table], scalars))
}
