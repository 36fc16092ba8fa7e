//! Point files and branch tables.
//!
//! A point file is a `key value…` text header followed by `@name len`
//! arrays, one number per line. Floats use the shortest round-trip decimal
//! form, so save/load is bit-exact. Operator caches are never written; the
//! loader rebuilds them from the mesh spec and `bcper`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{Geometry, MeshSpec};
use crate::periodic::BcPer;
use crate::problem::{
    Axis, AuxEq, BifLoc, Branch, BranchRecord, Controls, Layout, Para, ProblemState, SolInfo, SpMode, Switches,
};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "pdecont-point";
pub const BRANCH_FILE: &str = "branch.csv";

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"))
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Serialized form of `p` with the point data replaced.
pub fn encode_point(p: &ProblemState, u: &[f64], tau: Option<&[f64]>, ptype: i8, ineg: i64) -> String {
    let mut s = String::new();
    let ms = p.mesh.spec();
    let sol = &p.sol;
    let nc = &p.nc;
    let sw = &p.sw;
    let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(s, "demo {}", p.model.name());
    let _ = writeln!(s, "neq {}", p.neq);
    let _ = writeln!(
        s,
        "mesh {} {:?} {:?} {} {}",
        ms.geometry.as_str(),
        ms.lx,
        ms.ly,
        ms.nx,
        ms.ny
    );
    let _ = writeln!(s, "bcper {}", sw.bcper.code());
    let layout = match p.layout {
        Layout::Normal => "normal",
        Layout::Extended => "extended",
    };
    let _ = writeln!(s, "layout {layout}");
    let _ = writeln!(s, "params {}", p.model.param_names().join(" "));
    let _ = writeln!(s, "ilam {}", p.ilam.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "));
    for a in &p.aux {
        match a {
            AuxEq::Mass { component, target } => {
                let _ = writeln!(s, "aux mass {component} {target}");
            }
            AuxEq::Phase { axis, anchored } => {
                let ax = if *axis == Axis::X { "x" } else { "y" };
                let _ = writeln!(s, "aux phase {ax} {}", *anchored as u8);
            }
        }
    }
    let _ = writeln!(s, "ptype {ptype}");
    let _ = writeln!(s, "counters {} {} {}", sol.count, sol.bcount, sol.fcount);
    let _ = writeln!(s, "ineg {ineg}");
    let _ = writeln!(s, "iter {}", sol.iter);
    let _ = writeln!(
        s,
        "sol {:?} {:?} {:?} {:?} {:?} {:?}",
        sol.ds, sol.xi, sol.xiq, sol.res, sol.lamd, sol.err
    );
    // no error estimator: the err column is always 0
    let _ = writeln!(s, "err_estimator none");
    let _ = writeln!(s, "time {}", fmt_opt(sol.time));
    let _ = writeln!(s, "usrlam {}", fmt_vec(&p.usrlam));
    let _ = writeln!(
        s,
        "nc {:?} {} {:?} {:?} {:?} {:?} {} {:?} {:?} {:?} {:?} {} {} {} {} {:?} {:?} {} {} {:?}",
        nc.tol,
        nc.imax,
        nc.del,
        nc.ds,
        nc.dsmin,
        nc.dsmax,
        nc.dsinciter,
        nc.dsincfac,
        nc.dlammax,
        nc.lamdtol,
        nc.dsminbis,
        nc.bisecmax,
        nc.nsteps,
        nc.ntot,
        nc.neig,
        nc.lammin,
        nc.lammax,
        fmt_opt(nc.xi),
        fmt_opt(nc.xiq),
        nc.stiff_spring
    );
    let _ = writeln!(
        s,
        "sw {} {} {} {} {} {} {} {} {} {} {} {} {:?}",
        sw.bifcheck as u8,
        sw.foldcheck as u8,
        sw.spcalc as u8,
        sw.jac as u8,
        sw.qjac as u8,
        sw.spjac as u8,
        sw.sfem as u8,
        sw.para as u8,
        sw.bifloc as u8,
        sw.bcper.code(),
        sw.spcont as u8,
        sw.newt as u8,
        sw.norm
    );
    let mut arr = |name: &str, v: &[f64]| {
        let _ = writeln!(s, "@{name} {}", v.len());
        for x in v {
            let _ = writeln!(s, "{x:?}");
        }
    };
    arr("u", u);
    if let Some(t) = tau {
        arr("tau", t);
    }
    if let Some(r) = &p.u_ref {
        arr("u_ref", r);
    }
    s
}

/// Saves `u`/`tau` as `<p.dir>/<name>`; a no-op without output directory.
pub fn save_point(p: &ProblemState, u: &[f64], tau: Option<&[f64]>, ptype: i8, ineg: i64, name: &str) -> Result<()> {
    let Some(dir) = &p.dir else { return Ok(()) };
    write_atomic(&dir.join(name), &encode_point(p, u, tau, ptype, ineg))
}

/// Saves the current point of `p`.
pub fn save_current(p: &ProblemState, name: &str) -> Result<()> {
    save_point(p, &p.u, p.tau.as_deref(), p.sol.ptype, p.sol.ineg, name)
}

/// Writes the current state to an explicit path.
pub fn save_to(p: &ProblemState, path: &Path) -> Result<()> {
    write_atomic(path, &encode_point(p, &p.u, p.tau.as_deref(), p.sol.ptype, p.sol.ineg))
}

struct Parsed {
    header: BTreeMap<String, Vec<String>>,
    aux: Vec<Vec<String>>,
    arrays: BTreeMap<String, Vec<f64>>,
}

fn parse(text: &str) -> Result<Parsed> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::format("empty point file"))?;
    let mut it = first.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(Error::format("not a point file"));
    }
    let ver: u32 = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::format("missing format version"))?;
    if ver != FORMAT_VERSION {
        return Err(Error::format(format!("format version {ver}, expected {FORMAT_VERSION}")));
    }
    let mut header = BTreeMap::new();
    let mut aux = Vec::new();
    let mut arrays = BTreeMap::new();
    let mut pending: Option<(String, usize, Vec<f64>)> = None;
    for (ln, line) in lines.enumerate() {
        if let Some((name, len, mut v)) = pending.take() {
            if v.len() < len {
                let x: f64 = line
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(format!("line {}: bad number `{line}`", ln + 2)))?;
                v.push(x);
                if v.len() == len {
                    arrays.insert(name, v);
                } else {
                    pending = Some((name, len, v));
                }
                continue;
            }
            arrays.insert(name, v);
        }
        if let Some(rest) = line.strip_prefix('@') {
            let mut f = rest.split_whitespace();
            let name = f.next().ok_or_else(|| Error::format("array without name"))?.to_string();
            let len: usize = f
                .next()
                .and_then(|l| l.parse().ok())
                .ok_or_else(|| Error::format(format!("array `{name}` without length")))?;
            if len == 0 {
                arrays.insert(name, Vec::new());
            } else {
                pending = Some((name, len, Vec::with_capacity(len)));
            }
            continue;
        }
        let mut f = line.split_whitespace();
        let Some(key) = f.next() else { continue };
        let vals: Vec<String> = f.map(String::from).collect();
        if key == "aux" {
            aux.push(vals);
        } else {
            header.insert(key.to_string(), vals);
        }
    }
    if let Some((name, len, v)) = pending {
        return Err(Error::format(format!("array `{name}` truncated: {} of {len}", v.len())));
    }
    Ok(Parsed { header, aux, arrays })
}

impl Parsed {
    fn get(&self, key: &str) -> Result<&[String]> {
        self.header
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::format(format!("missing header `{key}`")))
    }

    fn one(&self, key: &str) -> Result<&str> {
        self.get(key)?
            .first()
            .map(String::as_str)
            .ok_or_else(|| Error::format(format!("empty header `{key}`")))
    }
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::format(format!("bad {what} `{s}`")))
}

fn opt_f64(s: &str) -> Result<Option<f64>> {
    if s == "none" {
        Ok(None)
    } else {
        num(s, "float").map(Some)
    }
}

fn flag(s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::format(format!("bad flag `{s}`"))),
    }
}

fn need(v: &[String], n: usize, key: &str) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::format(format!("header `{key}` needs {n} fields, got {}", v.len())))
    }
}

/// Parses a point file and rebuilds the full state.
pub fn decode_point(text: &str) -> Result<ProblemState> {
    let ps = parse(text)?;
    let model = crate::demos::model_by_name(ps.one("demo")?)?;
    let neq: usize = num(ps.one("neq")?, "neq")?;
    if neq != model.neq() {
        return Err(Error::format(format!("neq {neq} does not match demo ({})", model.neq())));
    }
    let m = ps.get("mesh")?;
    need(m, 5, "mesh")?;
    let spec = MeshSpec {
        geometry: Geometry::parse(&m[0])?,
        lx: num(&m[1], "lx")?,
        ly: num(&m[2], "ly")?,
        nx: num(&m[3], "nx")?,
        ny: num(&m[4], "ny")?,
    };
    let bcper = BcPer::from_code(num(ps.one("bcper")?, "bcper")?)?;
    let layout = match ps.one("layout")? {
        "normal" => Layout::Normal,
        "extended" => Layout::Extended,
        l => return Err(Error::format(format!("unknown layout `{l}`"))),
    };
    let names = ps.get("params")?;
    if names != model.param_names().as_slice() {
        return Err(Error::format(format!("parameter names {names:?} do not match the demo")));
    }
    let ilam: Vec<usize> = ps.get("ilam")?.iter().map(|s| num(s, "ilam")).collect::<Result<_>>()?;
    let aux: Vec<AuxEq> = ps
        .aux
        .iter()
        .map(|a| match a.first().map(String::as_str) {
            Some("mass") if a.len() == 3 => Ok(AuxEq::Mass {
                component: num(&a[1], "component")?,
                target: num(&a[2], "target")?,
            }),
            Some("phase") if a.len() == 3 => Ok(AuxEq::Phase {
                axis: match a[1].as_str() {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    o => return Err(Error::format(format!("bad axis `{o}`"))),
                },
                anchored: flag(&a[2])?,
            }),
            _ => Err(Error::format(format!("bad aux line {a:?}"))),
        })
        .collect::<Result<_>>()?;
    let c = ps.get("counters")?;
    need(c, 3, "counters")?;
    let so = ps.get("sol")?;
    need(so, 6, "sol")?;
    let sol = SolInfo {
        ds: num(&so[0], "ds")?,
        xi: num(&so[1], "xi")?,
        xiq: num(&so[2], "xiq")?,
        res: num(&so[3], "res")?,
        lamd: num(&so[4], "lamd")?,
        err: num(&so[5], "err")?,
        ineg: num(ps.one("ineg")?, "ineg")?,
        iter: num(ps.one("iter")?, "iter")?,
        ptype: num(ps.one("ptype")?, "ptype")?,
        count: num(&c[0], "count")?,
        bcount: num(&c[1], "bcount")?,
        fcount: num(&c[2], "fcount")?,
        time: opt_f64(ps.one("time")?)?,
    };
    let usrlam: Vec<f64> = ps.get("usrlam")?.iter().map(|s| num(s, "usrlam")).collect::<Result<_>>()?;
    let n = ps.get("nc")?;
    need(n, 20, "nc")?;
    let nc = Controls {
        tol: num(&n[0], "tol")?,
        imax: num(&n[1], "imax")?,
        del: num(&n[2], "del")?,
        ds: num(&n[3], "ds")?,
        dsmin: num(&n[4], "dsmin")?,
        dsmax: num(&n[5], "dsmax")?,
        dsinciter: num(&n[6], "dsinciter")?,
        dsincfac: num(&n[7], "dsincfac")?,
        dlammax: num(&n[8], "dlammax")?,
        lamdtol: num(&n[9], "lamdtol")?,
        dsminbis: num(&n[10], "dsminbis")?,
        bisecmax: num(&n[11], "bisecmax")?,
        nsteps: num(&n[12], "nsteps")?,
        ntot: num(&n[13], "ntot")?,
        neig: num(&n[14], "neig")?,
        lammin: num(&n[15], "lammin")?,
        lammax: num(&n[16], "lammax")?,
        xi: opt_f64(&n[17])?,
        xiq: opt_f64(&n[18])?,
        stiff_spring: num(&n[19], "stiff_spring")?,
    };
    let w = ps.get("sw")?;
    need(w, 13, "sw")?;
    let sw = Switches {
        bifcheck: flag(&w[0])?,
        foldcheck: flag(&w[1])?,
        spcalc: flag(&w[2])?,
        jac: flag(&w[3])?,
        qjac: flag(&w[4])?,
        spjac: flag(&w[5])?,
        sfem: flag(&w[6])?,
        para: Para::from_code(num(&w[7], "para")?)?,
        bifloc: BifLoc::from_code(num(&w[8], "bifloc")?)?,
        bcper: BcPer::from_code(num(&w[9], "bcper")?)?,
        spcont: SpMode::from_code(num(&w[10], "spcont")?)?,
        newt: flag(&w[11])?,
        norm: num(&w[12], "norm")?,
    };
    if sw.bcper != bcper {
        return Err(Error::format("bcper header and switch disagree"));
    }
    let u = ps
        .arrays
        .get("u")
        .cloned()
        .ok_or_else(|| Error::format("missing array `u`"))?;
    let tau = ps.arrays.get("tau").cloned();
    let u_ref = ps.arrays.get("u_ref").cloned();

    let mesh = spec.build()?;
    let ops = crate::problem::OperatorCache::build(model.as_ref(), &mesh, bcper, nc.stiff_spring)?;
    let nu = ops.per.nu_per;
    let nv = match layout {
        Layout::Normal => nu,
        Layout::Extended => 2 * nu,
    };
    let naux = model.param_names().len();
    if u.len() != nv + naux {
        return Err(Error::format(format!("u has length {}, expected {}", u.len(), nv + naux)));
    }
    if let Some(r) = &u_ref {
        if r.len() != nu {
            return Err(Error::format("u_ref length mismatch"));
        }
    }
    let mut p = ProblemState {
        model,
        mesh,
        neq,
        nu,
        u,
        tau: None,
        ilam: Vec::new(),
        aux,
        layout,
        nc,
        sw,
        ops,
        sol,
        branch: Branch::default(),
        usrlam,
        u_ref,
        dir: None,
    };
    p.set_ilam(ilam)?;
    if let Some(t) = tau {
        if t.len() != p.n_eq() + 1 {
            return Err(Error::format("tau length mismatch"));
        }
        p.tau = Some(t);
    }
    Ok(p)
}

/// Loads `<dir>/<name>`; the output directory of the state becomes `dir`.
pub fn load_point(dir: &Path, name: &str) -> Result<ProblemState> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::format(format!("cannot read {}: {e}", path.display())))?;
    let mut p = decode_point(&text)?;
    p.dir = Some(dir.to_path_buf());
    Ok(p)
}

pub fn branch_csv(b: &Branch) -> String {
    let mut s = String::new();
    let mut head = vec!["count".to_string(), "ptype".to_string()];
    head.extend(b.param_names.iter().cloned());
    head.extend(["ineg", "err", "l2norm", "target"].map(String::from));
    head.extend(b.user_names.iter().cloned());
    let _ = writeln!(s, "{}", head.join(","));
    for r in &b.rows {
        let mut f = vec![r.count.to_string(), r.ptype.to_string()];
        f.extend(r.params.iter().map(|x| format!("{x:?}")));
        f.push(r.ineg.to_string());
        f.push(format!("{:?}", r.err));
        f.push(format!("{:?}", r.l2));
        f.push((r.target as u8).to_string());
        f.extend(r.user.iter().map(|x| format!("{x:?}")));
        let _ = writeln!(s, "{}", f.join(","));
    }
    s
}

pub fn parse_branch_csv(text: &str) -> Result<Branch> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::format("empty branch table"))?
        .split(',')
        .collect();
    let ineg_col = head
        .iter()
        .position(|h| *h == "ineg")
        .ok_or_else(|| Error::format("branch table without `ineg` column"))?;
    if head.len() < ineg_col + 4 || head[0] != "count" || head[1] != "ptype" {
        return Err(Error::format("malformed branch header"));
    }
    let np = ineg_col - 2;
    let mut b = Branch {
        param_names: head[2..ineg_col].iter().map(|s| s.to_string()).collect(),
        user_names: head[ineg_col + 4..].iter().map(|s| s.to_string()).collect(),
        rows: Vec::new(),
    };
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != head.len() {
            return Err(Error::format(format!("row has {} fields, header {}", f.len(), head.len())));
        }
        b.rows.push(BranchRecord {
            count: num(f[0], "count")?,
            ptype: num(f[1], "ptype")?,
            params: f[2..2 + np].iter().map(|s| num(s, "parameter")).collect::<Result<_>>()?,
            ineg: num(f[ineg_col], "ineg")?,
            err: num(f[ineg_col + 1], "err")?,
            l2: num(f[ineg_col + 2], "l2norm")?,
            target: flag(f[ineg_col + 3])?,
            user: f[ineg_col + 4..].iter().map(|s| num(s, "user column")).collect::<Result<_>>()?,
        });
    }
    Ok(b)
}

/// Rewrites `<p.dir>/branch.csv`.
pub fn save_branch(p: &ProblemState) -> Result<()> {
    let Some(dir) = &p.dir else { return Ok(()) };
    write_atomic(&dir.join(BRANCH_FILE), &branch_csv(&p.branch))
}

pub fn load_branch(dir: &Path) -> Result<Branch> {
    let path: PathBuf = dir.join(BRANCH_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::format(format!("cannot read {}: {e}", path.display())))?;
    parse_branch_csv(&text)
}

/// Snapshot with only `u` (time-integration output).
pub fn save_u_only(path: &Path, u: &[f64], time: f64) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "pdecont-u {FORMAT_VERSION}");
    let _ = writeln!(s, "time {time:?}");
    let _ = writeln!(s, "@u {}", u.len());
    for x in u {
        let _ = writeln!(s, "{x:?}");
    }
    write_atomic(path, &s)
}

pub fn load_u_only(path: &Path) -> Result<(f64, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(|l| l.starts_with("pdecont-u ")) != Some(true) {
        return Err(Error::format("not a u-snapshot"));
    }
    let time = lines
        .next()
        .and_then(|l| l.strip_prefix("time "))
        .ok_or_else(|| Error::format("missing time"))
        .and_then(|t| num::<f64>(t, "time"))?;
    let len: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("@u "))
        .ok_or_else(|| Error::format("missing @u"))
        .and_then(|t| num(t, "length"))?;
    let u: Vec<f64> = lines.take(len).map(|l| num(l.trim(), "value")).collect::<Result<_>>()?;
    if u.len() != len {
        return Err(Error::format("truncated snapshot"));
    }
    Ok((time, u))
}

#[cfg(test)]
mod tests;
