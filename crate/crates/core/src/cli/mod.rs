//! Command-line surface.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pdecont::continuation::{self, ContReport};
use pdecont::demos::{self, DemoConfig};
use pdecont::problem::ProblemState;
use pdecont::{io, plot, spcont, switching, timeint};

#[derive(Parser, Debug)]
#[command(name = "pdecont", version, about = "Continuation and bifurcation for 2D elliptic PDE systems")]
pub struct Cli {
    /// Default output root for directories not given with --out.
    #[arg(long, env = "PDECONT_OUT", default_value = "out", global = true)]
    root: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Continue a demo from its initial state.
    Run {
        /// One of acfold, schnak, bratu, nlbc, acfront
        demo: String,
        #[command(flatten)]
        demo_args: DemoArgs,
        #[command(flatten)]
        cont: ContArgs,
    },
    /// Continue a demo until `nbif` bifurcation points were located.
    Findbif {
        /// One of acfold, schnak, bratu, nlbc, acfront
        demo: String,
        #[arg(long, default_value_t = 1)]
        nbif: usize,
        #[command(flatten)]
        demo_args: DemoArgs,
        #[command(flatten)]
        cont: ContArgs,
    },
    /// Switch onto the bifurcating branch at a saved bifurcation point.
    Swibra {
        dir: PathBuf,
        point: String,
        #[command(flatten)]
        cont: ContArgs,
    },
    /// Change the active parameters of a saved point and continue.
    Swipar {
        dir: PathBuf,
        point: String,
        /// 1-based parameter indices, primary first.
        #[arg(long, value_delimiter = ',', required = true)]
        ilam: Vec<usize>,
        #[command(flatten)]
        cont: ContArgs,
    },
    /// Continue a fold or branch point in one extra parameter.
    Spcont {
        dir: PathBuf,
        point: String,
        #[arg(long)]
        extra: usize,
        #[command(flatten)]
        cont: ContArgs,
    },
    /// Leave fold or branch-point continuation and continue in `primary`.
    Spcontexit {
        dir: PathBuf,
        point: String,
        #[arg(long)]
        primary: usize,
        #[command(flatten)]
        cont: ContArgs,
    },
    /// Full-assembly time integration of a saved point.
    Tint {
        #[command(flatten)]
        t: TintArgs,
    },
    /// Semilinear time integration with a single factorization.
    Tints {
        #[command(flatten)]
        t: TintArgs,
    },
    /// Render branches or solutions as SVG.
    #[command(subcommand)]
    Plot(PlotCmd),
    /// Analytic Jacobians against finite differences.
    Check { demo: String },
}

#[derive(Subcommand, Debug)]
enum PlotCmd {
    /// Bifurcation diagram of one or more branch directories.
    Branch {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// x column; defaults to the first parameter column.
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value = "l2norm")]
        y: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heatmap of one solution component.
    Sol {
        dir: PathBuf,
        point: String,
        /// 1-based component.
        #[arg(long, default_value_t = 1)]
        comp: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct DemoArgs {
    /// TOML config replacing the embedded default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override `name=value`, repeatable.
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
    /// Target values of the primary parameter.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    usrlam: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct ContArgs {
    /// Maximal number of continuation steps
    #[arg(long)]
    steps: Option<usize>,
    /// Initial step length; the sign sets the direction
    #[arg(long, allow_hyphen_values = true)]
    ds: Option<f64>,
    /// Lower bound of the primary parameter window
    #[arg(long, allow_hyphen_values = true)]
    lammin: Option<f64>,
    /// Upper bound of the primary parameter window
    #[arg(long, allow_hyphen_values = true)]
    lammax: Option<f64>,
    /// Skip the stability index and bifurcation detection
    #[arg(long)]
    no_bifcheck: bool,
    /// Detect folds by a sign change of the parameter tangent
    #[arg(long)]
    foldcheck: bool,
    /// Output directory for points and the branch table
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TintArgs {
    dir: PathBuf,
    point: String,
    #[arg(long)]
    dt: f64,
    #[arg(long)]
    nt: usize,
    #[arg(long, default_value_t = 10)]
    pmod: usize,
    /// Directory receiving `pre/`; defaults to `dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kv(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

impl ContArgs {
    fn apply(&self, p: &mut ProblemState, out: PathBuf) -> Result<usize> {
        if let Some(ds) = self.ds {
            p.nc.ds = ds;
            p.sol.ds = ds;
        }
        if let Some(v) = self.lammin {
            p.nc.lammin = v;
        }
        if let Some(v) = self.lammax {
            p.nc.lammax = v;
        }
        if self.no_bifcheck {
            p.sw.bifcheck = false;
        }
        if self.foldcheck {
            p.sw.foldcheck = true;
        }
        p.nc.validate()?;
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        p.dir = Some(out);
        Ok(self.steps.unwrap_or(p.nc.nsteps))
    }

    fn out_or(&self, root: &Path, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| root.join(name))
    }
}

fn demo_state(name: &str, a: &DemoArgs) -> Result<ProblemState> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            DemoConfig::parse(&text)?
        }
        None => DemoConfig::default_for(name)?,
    };
    for (k, v) in &a.params {
        cfg.set_param(k, *v);
    }
    if let Some(u) = &a.usrlam {
        cfg.usrlam = u.clone();
    }
    Ok(demos::init(name, &cfg)?)
}

fn load(dir: &Path, point: &str) -> Result<ProblemState> {
    io::load_point(dir, point).with_context(|| format!("loading {}/{point}", dir.display()))
}

fn summary(p: &ProblemState, rep: &ContReport) {
    let dir = p.dir.as_deref().map(|d| d.display().to_string()).unwrap_or_default();
    println!("{dir}: {} steps, stop: {:?}", rep.steps, rep.stop);
    // file indices continue the counters of the run
    let bif = |t: i8| t == pdecont::problem::ptype::BIFURCATION;
    let nb = rep.points.iter().filter(|s| bif(s.ptype)).count();
    let (mut b, mut f) = (p.sol.bcount - nb, p.sol.fcount - (rep.points.len() - nb));
    for sp in &rep.points {
        let name = if bif(sp.ptype) {
            b += 1;
            format!("bpt{b}")
        } else {
            f += 1;
            format!("fpt{f}")
        };
        let par = &sp.u[p.nv()..];
        let act: Vec<String> = p.ilam.iter().map(|&i| format!("{:.6}", par[i - 1])).collect();
        println!("  {name}: ({}) ineg {}", act.join(", "), sp.ineg);
    }
    for (t, _) in &rep.hits {
        println!("  target {t}");
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let root = cli.root;
    match cli.cmd {
        Cmd::Run { demo, demo_args, cont } => {
            let mut p = demo_state(&demo, &demo_args)?;
            let n = cont.apply(&mut p, cont.out_or(&root, "tr"))?;
            let rep = continuation::cont(&mut p, n)?;
            summary(&p, &rep);
        }
        Cmd::Findbif { demo, nbif, demo_args, cont } => {
            let mut p = demo_state(&demo, &demo_args)?;
            let n = cont.apply(&mut p, cont.out_or(&root, "tr"))?;
            let rep = switching::findbif(&mut p, nbif, n)?;
            summary(&p, &rep);
        }
        Cmd::Swibra { dir, point, cont } => {
            let mut p = load(&dir, &point)?;
            let ds = cont.ds.unwrap_or(p.nc.ds);
            let k = switching::swibra(&mut p, ds)?;
            log::info!("kernel |mu| = {:.3e}, next {:.3e}", k.mu[0], k.mu[1]);
            let n = cont.apply(&mut p, cont.out_or(&root, "q"))?;
            let rep = continuation::cont(&mut p, n)?;
            summary(&p, &rep);
        }
        Cmd::Swipar { dir, point, ilam, cont } => {
            let mut p = load(&dir, &point)?;
            p.swipar(ilam)?;
            p.sol.count = 0;
            let n = cont.apply(&mut p, cont.out_or(&root, "swipar"))?;
            let rep = continuation::cont(&mut p, n)?;
            summary(&p, &rep);
        }
        Cmd::Spcont { dir, point, extra, cont } => {
            let mut p = load(&dir, &point)?;
            spcont::spcontini(&mut p, extra)?;
            let n = cont.apply(&mut p, cont.out_or(&root, "spcont"))?;
            let rep = continuation::cont(&mut p, n)?;
            summary(&p, &rep);
        }
        Cmd::Spcontexit { dir, point, primary, cont } => {
            let mut p = load(&dir, &point)?;
            spcont::spcontexit(&mut p, primary)?;
            p.sol.count = 0;
            let n = cont.apply(&mut p, cont.out_or(&root, "exit"))?;
            let rep = continuation::cont(&mut p, n)?;
            summary(&p, &rep);
        }
        Cmd::Tint { t } => integrate(t, false)?,
        Cmd::Tints { t } => integrate(t, true)?,
        Cmd::Plot(PlotCmd::Branch { dirs, x, y, out }) => {
            let mut branches = Vec::with_capacity(dirs.len());
            for d in &dirs {
                let b = io::load_branch(d).with_context(|| format!("loading branch in {}", d.display()))?;
                let name = d.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                branches.push((name, b));
            }
            let x = match x {
                Some(x) => x,
                None => branches[0].1.param_names.first().cloned().context("branch has no parameter column")?,
            };
            let svg = plot::branch_svg(&branches, &x, &y)?;
            let out = out.unwrap_or_else(|| dirs[0].join("branch.svg"));
            io::write_atomic(&out, &svg)?;
            println!("{}", out.display());
        }
        Cmd::Plot(PlotCmd::Sol { dir, point, comp, out }) => {
            let p = load(&dir, &point)?;
            if comp == 0 || comp > p.neq {
                bail!("component {comp} outside 1..={}", p.neq);
            }
            let svg = plot::solution_svg(&p, comp - 1)?;
            let out = out.unwrap_or_else(|| dir.join(format!("{point}.svg")));
            io::write_atomic(&out, &svg)?;
            println!("{}", out.display());
        }
        Cmd::Check { demo } => {
            let p = demos::init_default(&demo)?;
            let (jac, sp) = demos::check(&p)?;
            let mut ok = jac <= 1e-5;
            println!("{demo}: jaccheck {jac:.3e} {}", verdict(jac <= 1e-5));
            match sp {
                Some(e) => {
                    ok &= e <= 1e-5;
                    println!("{demo}: spjac {e:.3e} {}", verdict(e <= 1e-5));
                }
                None => println!("{demo}: spjac not provided"),
            }
            if !ok {
                bail!("{demo}: derivative check failed");
            }
        }
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn integrate(t: TintArgs, semilinear: bool) -> Result<()> {
    let mut p = load(&t.dir, &t.point)?;
    let out = t.out.clone().unwrap_or_else(|| t.dir.clone());
    p.dir = Some(out);
    let rep = if semilinear {
        timeint::tints(&mut p, t.dt, t.nt, t.pmod)?
    } else {
        timeint::tint(&mut p, t.dt, t.nt, t.pmod)?
    };
    for (time, r) in &rep.residuals {
        println!("t = {time:.6e}  |G| = {r:.6e}");
    }
    println!("{} steps, {} factorizations, {} snapshots", rep.steps, rep.factorizations, rep.snapshots.len());
    Ok(())
}
