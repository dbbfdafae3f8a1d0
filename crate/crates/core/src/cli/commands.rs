use clap::ValueEnum;

use super::{
    AnnulusEvent, AsymptoticsArgs, AsymptoticsKind, CascadeArgs, CascadeMode, Cell, Common,
    ErTable, ErconnArgs, GoodKind, MeanfieldArgs, MeanfieldRatesKind, PrepercArgs, ProfileArgs,
    RatesKind, SimulateArgs, Table,
};
use crate::erconn::{
    binomial_tail_bound, chernoff_kappa, cor53_bound, durrett_lower_bound, exact_binomial_tail,
    exact_connectivity, exact_disconnectivity, h, log_scaled_p, mc_connectivity,
    nonconnectivity_upper_bound,
};
use crate::error::{Error, Result};
use crate::hierarchy::checked_power;
use crate::meanfield::{beta_sequence, estimate_from_sequence, exp_summability, MeanFieldRates};
use crate::numerics::{SeriesDiagnostics, Verdict};
use crate::profiles::{a_star, scale_index, ConnectionProfile, Rates, ScaledLog};
use crate::renorm::{
    cascade_advance, good_ball_probability, lemma51, pre_percolation_scan, renormalized_graph,
    skip_annulus_full_ball, step3_certificate, CascadeState, GoodBallConfig, Lemma51Case,
    Lemma51Params, PrePercMode, SkipParams, Step3Config, Step3Products, MAX_CASCADE_POINTS,
};
use crate::sampler::{density_curve, largest_cluster, par_replicates, realize_ball};

/// Parameter columns repeated on every row.
struct Echo(Vec<(&'static str, Cell)>);

impl Echo {
    fn table(&self, experiment: &str, measured: &[&str]) -> Table {
        let mut cols: Vec<&str> = self.0.iter().map(|(k, _)| *k).collect();
        cols.extend_from_slice(measured);
        Table::new(experiment, &cols)
    }

    fn push(&self, table: &mut Table, measured: Vec<Cell>) -> Result<()> {
        let mut row: Vec<Cell> = self.0.iter().map(|(_, v)| v.clone()).collect();
        row.extend(measured);
        table.push(row)
    }
}

fn need_seed(common: &Common, what: &str) -> Result<u64> {
    common.seed.ok_or_else(|| {
        Error::Config(format!(
            "{what} draws random samples, so --seed is required"
        ))
    })
}

fn name<T: ValueEnum>(v: &T) -> Cell {
    v.to_possible_value()
        .map_or(Cell::Empty, |p| Cell::Text(p.get_name().to_string()))
}

fn list(values: &[f64]) -> Cell {
    Cell::Text(
        values
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(";"),
    )
}

/// A value and its finiteness flag; non-finite values leave the cell empty.
fn finite(x: f64) -> [Cell; 2] {
    if x.is_finite() {
        [Cell::Float(x), Cell::Bool(true)]
    } else {
        [Cell::Empty, Cell::Bool(false)]
    }
}

fn verdict(v: Verdict) -> Cell {
    match v {
        Verdict::SummableAtHorizon => "summable-at-horizon".into(),
        Verdict::NotSummableAtHorizon => "not-summable-at-horizon".into(),
    }
}

const DIAGNOSTIC_COLUMNS: [&str; 6] = [
    "decade_increment",
    "decay_exponent",
    "decay_exponent_finite",
    "tail_estimate",
    "tail_estimate_finite",
    "verdict",
];

fn diagnostic_cells(d: &SeriesDiagnostics) -> Vec<Cell> {
    let mut out = vec![Cell::from(d.decade_increment)];
    out.extend(finite(d.decay_exponent));
    out.extend(finite(d.tail_estimate));
    out.push(verdict(d.verdict));
    out
}

fn build_profile(p: &ProfileArgs) -> Result<ConnectionProfile> {
    let rates = match p.rates {
        RatesKind::Constant => Rates::Constant { c: p.c },
        RatesKind::LogPoly => Rates::LogPoly {
            c0: p.c0,
            c1: p.c1,
            c2: p.c2,
            alpha: p.alpha,
        },
        RatesKind::ScaledLog => Rates::ScaledLog(
            ScaledLog::new(p.k_scale, p.c, p.a, p.b)?.with_interpolation(p.interpolation),
        ),
        RatesKind::Table => Rates::Table {
            values: p.values.clone(),
        },
    };
    ConnectionProfile::new(p.base, p.delta, rates)
}

fn profile_echo(p: &ProfileArgs) -> Vec<(&'static str, Cell)> {
    vec![
        ("base", p.base.into()),
        ("delta", p.delta.into()),
        ("rates", name(&p.rates)),
        ("c", p.c.into()),
        ("c0", p.c0.into()),
        ("c1", p.c1.into()),
        ("c2", p.c2.into()),
        ("alpha", p.alpha.into()),
        ("k_scale", p.k_scale.into()),
        ("a", p.a.into()),
        ("b", p.b.into()),
        (
            "interpolation",
            format!("{:?}", p.interpolation).to_lowercase().into(),
        ),
        ("values", list(&p.values)),
    ]
}

pub fn simulate(args: &SimulateArgs, workers: usize) -> Result<Table> {
    let seed = need_seed(&args.common, "simulate")?;
    let profile = build_profile(&args.profile)?;
    if args.k_min == 0 || args.k_max < args.k_min {
        return Err(Error::InvalidInput(
            "levels need 1 <= k-min <= k-max".into(),
        ));
    }
    if args.replicates == 0 {
        return Err(Error::InvalidInput(
            "at least one replicate is needed".into(),
        ));
    }
    let mut echo = profile_echo(&args.profile);
    echo.extend([
        ("k_min", args.k_min.into()),
        ("k_max", args.k_max.into()),
        ("replicates", args.replicates.into()),
        ("per_replicate", args.per_replicate.into()),
        ("seed", seed.into()),
    ]);
    let echo = Echo(echo);
    let levels: Vec<u32> = (args.k_min..=args.k_max).collect();
    if args.per_replicate {
        let mut table = echo.table(
            "simulate",
            &[
                "k",
                "replicate",
                "points",
                "largest",
                "density",
                "tied",
                "edges",
            ],
        );
        for &k in &levels {
            let runs = par_replicates(args.replicates, workers, |r| {
                realize_ball(&profile, k, seed, r, false).map(|real| {
                    let s = largest_cluster(&real);
                    (
                        s.points,
                        s.largest,
                        s.density,
                        s.tied,
                        real.edge_counts.iter().sum::<u64>(),
                    )
                })
            });
            for (r, run) in runs.into_iter().enumerate() {
                let (points, largest, density, tied, edges) = run?;
                echo.push(
                    &mut table,
                    vec![
                        k.into(),
                        r.into(),
                        points.into(),
                        largest.into(),
                        density.into(),
                        tied.into(),
                        edges.into(),
                    ],
                )?;
            }
        }
        return Ok(table);
    }
    let mut table = echo.table(
        "simulate",
        &[
            "k",
            "mean_density",
            "std_density",
            "mean_largest",
            "mean_edges",
        ],
    );
    for pt in density_curve(&profile, &levels, args.replicates, seed, workers)? {
        echo.push(
            &mut table,
            vec![
                pt.k.into(),
                pt.mean_density.into(),
                pt.std_density.into(),
                pt.mean_largest.into(),
                pt.mean_edges.into(),
            ],
        )?;
    }
    Ok(table)
}

pub fn cascade(args: &CascadeArgs, workers: usize) -> Result<Table> {
    match args.mode {
        CascadeMode::Certificate => certificate(args),
        CascadeMode::Simulate => cascade_simulation(args, workers),
    }
}

fn product_cells(p: Option<&Step3Products>) -> Vec<Cell> {
    match p {
        Some(p) => vec![
            p.ln_n0.into(),
            p.eps_product.into(),
            p.good_count_product.into(),
            p.connect_product.into(),
            p.count_floor_ok.into(),
            p.all_met.into(),
        ],
        None => vec![Cell::Empty; 6],
    }
}

fn certificate(args: &CascadeArgs) -> Result<Table> {
    let p = &args.profile;
    let a = match args.a_factor {
        Some(f) => f * a_star(p.k_scale, p.b, p.base)?,
        None => p.a,
    };
    let mut cfg = Step3Config::new(p.k_scale, p.b, p.base, a, args.theta)?;
    if let Some(kappa) = args.kappa {
        cfg.kappa = kappa;
    }
    cfg.m = args.m;
    cfg.l = args.l;
    cfg.n0 = args.n0;
    cfg.horizon = args.horizon;
    let report = step3_certificate(&cfg)?;
    let echo = Echo(vec![
        ("mode", name(&args.mode)),
        ("base", p.base.into()),
        ("k_scale", p.k_scale.into()),
        ("b", p.b.into()),
        ("a", a.into()),
        ("a_factor", args.a_factor.into()),
        ("theta", args.theta.into()),
        ("kappa", cfg.kappa.into()),
        ("m", args.m.into()),
        ("l", args.l.into()),
        ("n0_requested", args.n0.into()),
        ("horizon", args.horizon.into()),
        ("seed", args.common.seed.into()),
    ]);
    if args.induction {
        let mut table = echo.table(
            "cascade",
            &["offset", "beta", "p_good", "beta_ok", "p_good_ok"],
        );
        for s in &report.induction {
            echo.push(
                &mut table,
                vec![
                    s.offset.into(),
                    s.beta.into(),
                    s.p_good.into(),
                    s.beta_ok.into(),
                    s.p_good_ok.into(),
                ],
            )?;
        }
        return Ok(table);
    }
    let mut table = echo.table(
        "cascade",
        &[
            "a_star",
            "step1_exponent",
            "step2_exponent",
            "product_floor",
            "beta_floor",
            "beta_floor_exceeds_fifth",
            "p_good_floor",
            "p_good_floor_at_least_half",
            "n0",
            "ln_n0",
            "eps_product",
            "good_count_product",
            "connect_product",
            "count_floor_ok",
            "all_met",
            "requested_ln_n0",
            "requested_eps_product",
            "requested_good_count_product",
            "requested_connect_product",
            "requested_count_floor_ok",
            "requested_all_met",
            "induction_ok",
        ],
    );
    let c = &report.constants;
    let mut row = vec![
        report.a_star.into(),
        report.step1_exponent.into(),
        report.step2_exponent.into(),
        c.product_floor.into(),
        c.beta_floor.into(),
        c.beta_floor_exceeds_fifth.into(),
        c.p_good_floor.into(),
        c.p_good_floor_at_least_half.into(),
        report.n0.into(),
    ];
    row.extend(product_cells(report.products.as_ref()));
    row.extend(product_cells(report.requested.as_ref()));
    row.push(report.induction_ok.into());
    echo.push(&mut table, row)?;
    Ok(table)
}

fn cascade_simulation(args: &CascadeArgs, workers: usize) -> Result<Table> {
    let seed = need_seed(&args.common, "cascade simulation")?;
    let profile = build_profile(&args.profile)?;
    if args.n_min < 2 || args.n_max < args.n_min {
        return Err(Error::InvalidInput(
            "the cascade needs 2 <= n-min <= n-max".into(),
        ));
    }
    if args.replicates == 0 {
        return Err(Error::InvalidInput(
            "at least one replicate is needed".into(),
        ));
    }
    let k_scale = args.profile.k_scale;
    let mut echo = profile_echo(&args.profile);
    echo.extend([
        ("mode", name(&args.mode)),
        ("good", name(&args.good)),
        ("beta_start", args.beta.into()),
        ("gamma", args.gamma.into()),
        ("theta", args.theta.into()),
        ("n_min", args.n_min.into()),
        ("n_max", args.n_max.into()),
        ("replicates", args.replicates.into()),
        ("seed", seed.into()),
    ]);
    let echo = Echo(echo);
    let mut table = echo.table(
        "cascade",
        &[
            "n",
            "k_n",
            "k_next",
            "beta_n",
            "threshold",
            "p_good",
            "p_good_lower",
            "p_good_upper",
            "p_connect",
            "mean_good_vertices",
            "beta_next",
            "beta_ok",
            "p_good_ok",
        ],
    );
    let mut state = CascadeState::new(args.n_min, k_scale, args.beta, args.theta)?;
    for n in args.n_min..=args.n_max {
        let (k_n, k_next) = (scale_index(k_scale, n), scale_index(k_scale, n + 1));
        if k_n == 0 || k_next <= k_n {
            return Err(Error::InvalidInput(format!(
                "scale points k_{n} = {k_n}, k_{} = {k_next} must be increasing and positive",
                n + 1
            )));
        }
        let points = u32::try_from(k_next)
            .ok()
            .and_then(|k| checked_power(profile.base, k).ok())
            .filter(|&p| p <= MAX_CASCADE_POINTS);
        if points.is_none() {
            return Err(Error::InfeasibleScale(format!(
                "N^{k_next} exceeds the cascade simulation limit {MAX_CASCADE_POINTS}; use --mode certificate"
            )));
        }
        let (k_n, k_next) = (k_n as u32, k_next as u32);
        let config = match args.good {
            GoodKind::Beta => GoodBallConfig::Beta { beta: state.beta },
            GoodKind::Gamma => GoodBallConfig::Gamma { gamma: args.gamma },
        };
        let est = good_ball_probability(&profile, &config, k_n, args.replicates, seed, workers)?;
        let runs = par_replicates(args.replicates, workers, |r| {
            let real = realize_ball(&profile, k_next, seed, r, true)?;
            let g = renormalized_graph(&real, k_n, &config)?;
            Ok::<_, Error>((g.connected, g.vertices.len() as u64))
        });
        let runs: Vec<(bool, u64)> = runs.into_iter().collect::<Result<_>>()?;
        let reps = args.replicates as f64;
        let p_connect = runs.iter().filter(|r| r.0).count() as f64 / reps;
        let mean_vertices = runs.iter().map(|r| r.1 as f64).sum::<f64>() / reps;
        let adv = cascade_advance(&state, est.proportion.estimate)?;
        echo.push(
            &mut table,
            vec![
                n.into(),
                k_n.into(),
                k_next.into(),
                state.beta.into(),
                est.threshold.into(),
                est.proportion.estimate.into(),
                est.proportion.lower.into(),
                est.proportion.upper.into(),
                p_connect.into(),
                mean_vertices.into(),
                adv.state.beta.into(),
                adv.beta_ok.into(),
                adv.p_good_ok.into(),
            ],
        )?;
        if adv.state.beta <= 0.0 {
            break;
        }
        state = adv.state;
    }
    Ok(table)
}

pub fn meanfield(args: &MeanfieldArgs) -> Result<Table> {
    let rates = match args.rates {
        MeanfieldRatesKind::Constant => MeanFieldRates::Constant { c: args.c },
        MeanfieldRatesKind::LogK => MeanFieldRates::LogK {
            a: args.a,
            shift: args.shift,
        },
        MeanfieldRatesKind::Table => MeanFieldRates::Table {
            values: args.values.clone(),
        },
    };
    let echo = Echo(vec![
        ("rates", name(&args.rates)),
        ("c", args.c.into()),
        ("a", args.a.into()),
        ("shift", args.shift.into()),
        ("values", list(&args.values)),
        ("kmax", args.kmax.into()),
        ("tol", args.tol.into()),
        ("seed", args.common.seed.into()),
    ]);
    let seq = beta_sequence(&rates, args.kmax)?;
    if args.sequence {
        let mut table = echo.table(
            "meanfield",
            &["k", "c_k", "lambda", "beta", "product", "exp_sum"],
        );
        for i in 0..seq.beta.len() {
            echo.push(
                &mut table,
                vec![
                    (i as u64 + 1).into(),
                    seq.c[i].into(),
                    seq.lambda[i].into(),
                    seq.beta[i].into(),
                    seq.products[i].into(),
                    seq.exp_sums[i].into(),
                ],
            )?;
        }
        return Ok(table);
    }
    let est = estimate_from_sequence(&seq, args.tol);
    let sum = exp_summability(&rates, args.kmax)?;
    let mut cols = vec![
        "product",
        "converged",
        "max_late_step",
        "last_step",
        "late_defect_sum",
        "extinct_at",
        "exp_partial_sum",
    ];
    cols.extend(DIAGNOSTIC_COLUMNS);
    cols.push("warnings");
    let mut table = echo.table("meanfield", &cols);
    let mut row = vec![
        est.product.into(),
        est.converged.into(),
        est.max_late_step.into(),
        est.last_step.into(),
        est.late_defect_sum.into(),
        est.extinct_at.into(),
        sum.partial_sums.last().copied().into(),
    ];
    row.extend(diagnostic_cells(&sum.diagnostics));
    row.push(seq.warnings.join("; ").into());
    echo.push(&mut table, row)?;
    Ok(table)
}

pub fn erconn(args: &ErconnArgs, workers: usize) -> Result<Table> {
    let echo = Echo(vec![
        ("table", name(&args.table)),
        ("n", args.n.into()),
        ("n_max", args.n_max.into()),
        ("p_arg", args.p.into()),
        ("a", args.a.into()),
        ("exact", args.exact.into()),
        ("mc", args.mc.into()),
        ("durrett", args.durrett.into()),
        ("replicates", args.replicates.into()),
        ("m", args.m.into()),
        ("l", args.l.into()),
        ("exponent13", args.exponent13.into()),
        ("q", args.q.into()),
        ("tail_c", args.tail_c.into()),
        ("sigma", args.sigma.into()),
        ("eps_max", args.eps_max.into()),
        ("seed", args.common.seed.into()),
    ]);
    match args.table {
        ErTable::Connectivity => connectivity_table(args, &echo, workers),
        ErTable::Tails => {
            let mut table = echo.table("erconn", &["x", "bound", "exact", "dominated"]);
            let (n, q, c) = (args.n, args.q, args.tail_c);
            let start = (c * n as f64 * q).ceil().max(0.0) as u64;
            for x in start..=n {
                let bound = binomial_tail_bound(n, q, x as f64, c)?;
                let exact = exact_binomial_tail(n, q, x as f64)?;
                echo.push(
                    &mut table,
                    vec![
                        x.into(),
                        bound.into(),
                        exact.into(),
                        (exact <= bound).into(),
                    ],
                )?;
            }
            Ok(table)
        }
        ErTable::Cor53 => {
            let p = args
                .p
                .ok_or_else(|| Error::Config("the concentration table needs --p".into()))?;
            let (kappa, eps) = chernoff_kappa(args.eps_max)?;
            let r = cor53_bound(args.n, p, args.sigma, kappa, eps)?;
            let mut table = echo.table("erconn", &["kappa", "eps", "bound", "exact", "dominated"]);
            echo.push(
                &mut table,
                vec![
                    kappa.into(),
                    eps.into(),
                    r.bound.into(),
                    r.exact.into(),
                    (r.exact <= r.bound).into(),
                ],
            )?;
            Ok(table)
        }
        ErTable::Kappa => {
            let (kappa, eps) = chernoff_kappa(args.eps_max)?;
            let u = 1e-3;
            let ratio = h(1.0 + u) / (u * u);
            let mut table = echo.table("erconn", &["kappa", "eps", "ratio_near_zero", "limit_gap"]);
            echo.push(
                &mut table,
                vec![
                    kappa.into(),
                    eps.into(),
                    ratio.into(),
                    (ratio - 0.5).abs().into(),
                ],
            )?;
            Ok(table)
        }
    }
}

fn connectivity_table(args: &ErconnArgs, echo: &Echo, workers: usize) -> Result<Table> {
    let n_hi = args.n_max.unwrap_or(args.n);
    if n_hi < args.n {
        return Err(Error::InvalidInput("--n-max must be at least --n".into()));
    }
    let want_exact = args.exact || !(args.mc || args.durrett);
    let seed = if args.mc {
        Some(need_seed(&args.common, "--mc")?)
    } else {
        None
    };
    let durrett_a = if args.durrett {
        Some(
            args.a
                .ok_or_else(|| Error::Config("--durrett needs --a".into()))?,
        )
    } else {
        None
    };
    let mut table = echo.table(
        "erconn",
        &[
            "n_value",
            "p",
            "p_clamped",
            "exact_connected",
            "exact_disconnected",
            "mc_estimate",
            "mc_lower",
            "mc_upper",
            "mc_std_err",
            "durrett_value",
            "durrett_raw",
            "durrett_clamped",
            "nonconnectivity_bound",
        ],
    );
    for n in args.n..=n_hi {
        let (p, clamped) = match (args.p, args.a) {
            (Some(p), _) => (p, false),
            (None, Some(a)) => log_scaled_p(n, a),
            (None, None) => return Err(Error::Config("connectivity needs --p or --a".into())),
        };
        let mut row = vec![n.into(), p.into(), clamped.into()];
        if want_exact {
            row.push(exact_connectivity(n, p)?.into());
            row.push(exact_disconnectivity(n, p)?.into());
        } else {
            row.extend([Cell::Empty, Cell::Empty]);
        }
        match seed {
            Some(seed) => {
                let est = mc_connectivity(n, p, args.replicates, seed, workers)?;
                row.extend([
                    est.estimate.into(),
                    est.lower.into(),
                    est.upper.into(),
                    est.std_err.into(),
                ]);
            }
            None => row.extend(vec![Cell::Empty; 4]),
        }
        match durrett_a {
            Some(a) => {
                let d = durrett_lower_bound(n as f64, a)?;
                let nc = nonconnectivity_upper_bound(n as f64, a, args.m, args.l, args.exponent13)?;
                row.extend([d.value.into(), d.raw.into(), d.clamped.into(), nc.into()]);
            }
            None => row.extend(vec![Cell::Empty; 4]),
        }
        echo.push(&mut table, row)?;
    }
    Ok(table)
}

pub fn asymptotics(args: &AsymptoticsArgs) -> Result<Table> {
    if args.n_min < 2 || args.n_max < args.n_min {
        return Err(Error::InvalidInput(
            "the table needs 2 <= n-min <= n-max".into(),
        ));
    }
    let echo = Echo(vec![
        ("kind", name(&args.kind)),
        ("event", name(&args.event)),
        ("base", args.base.into()),
        ("k_scale", args.k_scale.into()),
        ("c", args.c.into()),
        ("a", args.a.into()),
        ("b", args.b.into()),
        ("j", args.j.into()),
        ("l", args.l.into()),
        ("m", args.m.into()),
        ("n_min", args.n_min.into()),
        ("n_max", args.n_max.into()),
        ("seed", args.common.seed.into()),
    ]);
    let mut table = echo.table(
        "asymptotics",
        &["n", "exact", "asymptotic", "ratio", "dominated"],
    );
    let eval: Box<dyn Fn(u64) -> Result<crate::renorm::ExactVsAsymptotic>> = match args.kind {
        AsymptoticsKind::Annulus => {
            let params = Lemma51Params::new(args.base, args.k_scale, args.c, args.a)?;
            let case = match args.event {
                AnnulusEvent::A => Lemma51Case::A { j: args.j },
                AnnulusEvent::B => Lemma51Case::B { j: args.j },
                AnnulusEvent::C => Lemma51Case::C,
                AnnulusEvent::D => Lemma51Case::D {
                    j: args.j,
                    l: args.l,
                },
                AnnulusEvent::E => Lemma51Case::E,
                AnnulusEvent::F => Lemma51Case::F,
            };
            Box::new(move |n| lemma51(&params, case, n))
        }
        AsymptoticsKind::Skip => {
            let params = SkipParams {
                base: args.base,
                k_scale: args.k_scale,
                b: args.b,
                a: args.a,
                c: args.c,
            };
            let (j, m) = (args.j, args.m);
            Box::new(move |n| skip_annulus_full_ball(&params, n, j, m))
        }
    };
    for n in args.n_min..=args.n_max {
        let r = eval(n)?;
        let ratio = r.exact / r.asymptotic;
        let ratio = if r.asymptotic > 0.0 && ratio.is_finite() {
            Cell::Float(ratio)
        } else {
            Cell::Empty
        };
        echo.push(
            &mut table,
            vec![
                n.into(),
                r.exact.into(),
                r.asymptotic.into(),
                ratio,
                (r.exact <= r.asymptotic).into(),
            ],
        )?;
    }
    Ok(table)
}

pub fn preperc(args: &PrepercArgs) -> Result<Table> {
    let params = Lemma51Params::new(args.base, args.k_scale, args.c, args.a)?;
    let mode = if args.sampled {
        PrePercMode::Sampled {
            seed: need_seed(&args.common, "--sampled")?,
        }
    } else {
        PrePercMode::Exact
    };
    let scan = pre_percolation_scan(&params, args.n_min, args.n_max, mode)?;
    let echo = Echo(vec![
        ("base", args.base.into()),
        ("k_scale", args.k_scale.into()),
        ("c", args.c.into()),
        ("a", args.a.into()),
        ("n_min", args.n_min.into()),
        ("n_max", args.n_max.into()),
        ("sampled", args.sampled.into()),
        ("seed", args.common.seed.into()),
    ]);
    if args.summary {
        let mut cols = vec!["partial_sum", "reference_sum"];
        cols.extend(DIAGNOSTIC_COLUMNS);
        cols.extend(["failures", "last_failure"]);
        let mut table = echo.table("preperc", &cols);
        let last = scan.rows.last().expect("the scan range is nonempty");
        let mut row = vec![last.partial_sum.into(), last.reference_sum.into()];
        row.extend(diagnostic_cells(&scan.diagnostics));
        row.extend([scan.failures.into(), scan.last_failure.into()]);
        echo.push(&mut table, row)?;
        return Ok(table);
    }
    let mut table = echo.table(
        "preperc",
        &[
            "n",
            "p_disconnect",
            "partial_sum",
            "reference_sum",
            "disconnected",
        ],
    );
    for r in &scan.rows {
        echo.push(
            &mut table,
            vec![
                r.n.into(),
                r.p_disconnect.into(),
                r.partial_sum.into(),
                r.reference_sum.into(),
                r.disconnected.into(),
            ],
        )?;
    }
    Ok(table)
}
