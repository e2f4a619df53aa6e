//! `.fgi` instance files.
//!
//! Plain text, one record per line, `#` starts a comment. After the
//! `FGI <version>` header come `key value` lines and dense matrices, each
//! matrix introduced by its key and followed by one row per line:
//!
//! ```text
//! FGI 1
//! layout line
//! cell_radius 1.5000000000000000e2
//! bs_spacing 2.0000000000000000e2
//! network_seed 1
//! bs_count 2
//! user_count 3
//! bs_positions          # M rows: x y
//! user_positions        # K rows: x y
//! connectivity          # K rows of M 0/1 flags
//! file_count 2
//! file_bits 1.0000000000000000e8
//! demand_seed 3
//! gammas <K values>     # may be empty
//! permutations 1|0      # 1: K rows of N 1-based ranks follow
//! preferences           # K rows of N probabilities
//! backhaul uniform <seconds> | backhaul matrix (then K rows of N)
//! end
//! ```
//!
//! Floats are written with 17 significant digits so reading is lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::{BackhaulDelay, DemandModel, Layout, NetworkInstance, Point};
use crate::textio::{fmt_f64, parse_err, parse_token, read_header, Reader};
use crate::{Error, Result};

pub const FGI_VERSION: u32 = 1;

pub fn write_instance(instance: &NetworkInstance, demand: &DemandModel) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "FGI {FGI_VERSION}");
    let _ = writeln!(w, "# fogcache instance");
    let _ = writeln!(w, "layout {}", instance.layout.name());
    let _ = writeln!(w, "cell_radius {}", fmt_f64(instance.cell_radius));
    let _ = writeln!(w, "bs_spacing {}", fmt_f64(instance.bs_spacing));
    let _ = writeln!(w, "network_seed {}", instance.seed);
    let _ = writeln!(w, "bs_count {}", instance.num_bs());
    let _ = writeln!(w, "user_count {}", instance.num_users());
    let _ = writeln!(w, "bs_positions");
    for p in &instance.bs_positions {
        let _ = writeln!(w, "{} {}", fmt_f64(p.x), fmt_f64(p.y));
    }
    let _ = writeln!(w, "user_positions");
    for p in &instance.user_positions {
        let _ = writeln!(w, "{} {}", fmt_f64(p.x), fmt_f64(p.y));
    }
    let _ = writeln!(w, "connectivity");
    for row in instance.connectivity() {
        let flags: Vec<&str> = row.iter().map(|&c| if c { "1" } else { "0" }).collect();
        let _ = writeln!(w, "{}", flags.join(" "));
    }

    let _ = writeln!(w, "file_count {}", demand.num_files());
    let _ = writeln!(w, "file_bits {}", fmt_f64(demand.file_bits));
    let _ = writeln!(w, "demand_seed {}", demand.seed);
    let gammas: Vec<String> = demand.gammas.iter().map(|&g| fmt_f64(g)).collect();
    let _ = writeln!(w, "gammas {}", gammas.join(" ").trim_end());
    let _ = writeln!(w, "permutations {}", u8::from(!demand.permutations.is_empty()));
    for row in &demand.permutations {
        let ranks: Vec<String> = row.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(w, "{}", ranks.join(" "));
    }
    let _ = writeln!(w, "preferences");
    for row in demand.preferences() {
        let vals: Vec<String> = row.iter().map(|&p| fmt_f64(p)).collect();
        let _ = writeln!(w, "{}", vals.join(" "));
    }
    match &demand.backhaul {
        BackhaulDelay::Uniform(d) => {
            let _ = writeln!(w, "backhaul uniform {}", fmt_f64(*d));
        }
        BackhaulDelay::PerRequest(rows) => {
            let _ = writeln!(w, "backhaul matrix");
            for row in rows {
                let vals: Vec<String> = row.iter().map(|&d| fmt_f64(d)).collect();
                let _ = writeln!(w, "{}", vals.join(" "));
            }
        }
    }
    let _ = writeln!(w, "end");
    out
}

pub fn read_instance(text: &str) -> Result<(NetworkInstance, DemandModel)> {
    let mut r = Reader::new(text, "instance file");
    read_header(&mut r, "FGI", FGI_VERSION)?;

    let (line, tokens) = r.expect_key("layout")?;
    let layout = match tokens.as_slice() {
        [name] => Layout::from_name(name)
            .ok_or_else(|| parse_err(line, format!("unknown layout `{name}`")))?,
        _ => return Err(parse_err(line, "layout takes one value".into())),
    };
    let cell_radius: f64 = r.value("cell_radius")?;
    let bs_spacing: f64 = r.value("bs_spacing")?;
    let network_seed: u64 = r.value("network_seed")?;
    let num_bs: usize = r.value("bs_count")?;
    let num_users: usize = r.value("user_count")?;
    r.expect_key("bs_positions")?;
    let bs_positions = read_points(&mut r, num_bs)?;
    r.expect_key("user_positions")?;
    let user_positions = read_points(&mut r, num_users)?;
    let (conn_line, _) = r.expect_key("connectivity")?;
    let connectivity: Vec<Vec<u8>> = r.rows(num_users, num_bs)?;

    let instance = NetworkInstance::from_positions(
        bs_positions,
        user_positions,
        cell_radius,
        bs_spacing,
        layout,
        network_seed,
    )?;
    for (k, row) in connectivity.iter().enumerate() {
        for (m, &flag) in row.iter().enumerate() {
            if (flag == 1) != instance.is_connected(k, m) || flag > 1 {
                return Err(parse_err(
                    conn_line,
                    format!("connectivity of user {k} and BS {m} disagrees with positions"),
                ));
            }
        }
    }

    let num_files: usize = r.value("file_count")?;
    let file_bits: f64 = r.value("file_bits")?;
    let demand_seed: u64 = r.value("demand_seed")?;
    let (g_line, g_tokens) = r.expect_key("gammas")?;
    let gammas = g_tokens
        .iter()
        .map(|t| parse_token(g_line, t))
        .collect::<Result<Vec<f64>>>()?;
    let has_perms: u8 = r.value("permutations")?;
    let permutations: Vec<Vec<usize>> = if has_perms == 1 {
        r.rows(num_users, num_files)?
    } else {
        Vec::new()
    };
    r.expect_key("preferences")?;
    let preferences: Vec<Vec<f64>> = r.rows(num_users, num_files)?;
    let (b_line, b_tokens) = r.expect_key("backhaul")?;
    let backhaul = match b_tokens.as_slice() {
        ["uniform", v] => BackhaulDelay::Uniform(parse_token(b_line, v)?),
        ["matrix"] => BackhaulDelay::PerRequest(r.rows(num_users, num_files)?),
        _ => return Err(parse_err(b_line, "expected `uniform <s>` or `matrix`".into())),
    };
    r.expect_key("end")?;

    let mut demand = DemandModel::new(preferences, num_files, file_bits, backhaul)?;
    demand.gammas = gammas;
    demand.permutations = permutations;
    demand.seed = demand_seed;
    Ok((instance, demand))
}

fn read_points(r: &mut Reader<'_>, count: usize) -> Result<Vec<Point>> {
    Ok(r
        .rows::<f64>(count, 2)?
        .into_iter()
        .map(|xy| Point::new(xy[0], xy[1]))
        .collect())
}

pub fn save_instance(path: &Path, instance: &NetworkInstance, demand: &DemandModel) -> Result<()> {
    std::fs::write(path, write_instance(instance, demand)).map_err(Error::from)
}

pub fn load_instance(path: &Path) -> Result<(NetworkInstance, DemandModel)> {
    read_instance(&std::fs::read_to_string(path)?)
}
