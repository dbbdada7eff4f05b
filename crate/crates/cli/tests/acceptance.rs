//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use simguard_bench::{
    generate_corpus, inject_violations, plan_injections, run_scaling, score, CorpusParams, ScalingConfig, Sweep,
};
use simguard_core::pattern::effective_pattern;
use simguard_core::{enumerate_single_source_codes, parse_code, validate, GuardSpec, InputSet, RunOptions};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simguard"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/exemplars")
}

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        let dest = to.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_dir(&entry.path(), &dest)?;
        } else {
            fs::copy(entry.path(), dest)?;
        }
    }
    Ok(())
}

/// Applies one twin mutation to `inputs`: a cell edit or row deletion on a
/// CSV, or a text replacement on a document.
fn mutate(inputs: &Path, twin: &Value) -> Result<(), String> {
    let file = twin["file"].as_str().ok_or("twin without file")?;
    let path = inputs.join(file);
    let text = fs::read_to_string(&path).map_err(|e| format!("{file}: {e}"))?;
    let out = if let Some(row) = twin["delete_row"].as_u64() {
        let mut lines: Vec<&str> = text.lines().collect();
        if row as usize + 1 >= lines.len() {
            return Err(format!("{file}: no row {row}"));
        }
        lines.remove(row as usize + 1);
        lines.join("\n") + "\n"
    } else if let Some(find) = twin["find"].as_str() {
        if !text.contains(find) {
            return Err(format!("{file}: `{find}` not found"));
        }
        text.replacen(find, twin["replace"].as_str().unwrap_or(""), 1)
    } else {
        let row = twin["row"].as_u64().ok_or("twin without row")? as usize;
        let column = twin["column"].as_str().ok_or("twin without column")?;
        let value = twin["value"].as_str().ok_or("twin without value")?;
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let c = lines[0]
            .split(',')
            .position(|h| h == column)
            .ok_or_else(|| format!("{file}: no column {column}"))?;
        let line = lines.get_mut(row + 1).ok_or_else(|| format!("{file}: no row {row}"))?;
        let mut cells: Vec<String> = line.split(',').map(String::from).collect();
        cells[c] = value.to_string();
        *line = cells.join(",");
        lines.join("\n") + "\n"
    };
    fs::write(&path, out).map_err(|e| e.to_string())
}

fn run_validate(dir: &Path, jobs: usize) -> Result<(i32, Value), String> {
    let out = bin()
        .args(["validate", "--format", "json", "--jobs", &jobs.to_string(), "--spec"])
        .arg(dir.join("guard.yml"))
        .arg("--inputs")
        .arg(dir.join("inputs"))
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1);
    if code == 2 {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let report = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok((code, report))
}

fn error_violations(report: &Value) -> Vec<&Value> {
    report["files"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|f| f["violations"].as_array().into_iter().flatten())
        .filter(|v| v["severity"] == "error")
        .collect()
}

fn exemplar_parity() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut fixtures_run = 0;
    let mut twins_run = 0;
    let mut names: Vec<PathBuf> = fs::read_dir(fixtures())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    names.sort();
    let mut codes = std::collections::BTreeSet::new();
    for fixture in &names {
        let spec = GuardSpec::load(&fixture.join("guard.yml")).map_err(|e| e.to_string())?;
        for d in &spec.constraints {
            if let Some(p) = effective_pattern(d, &spec).map_err(|e| e.to_string())? {
                codes.insert(p.to_string());
            }
        }
    }
    let missing: Vec<&str> = ["1.A.i", "1.B.ii", "2.A.ii", "3.A.i", "4.C.iii", "3.A.viii", "1.A.vii"]
        .into_iter()
        .filter(|c| !codes.contains(*c))
        .collect();
    if !missing.is_empty() {
        return Err(format!("no fixture constraint classifies as {missing:?}"));
    }
    for fixture in &names {
        let name = fixture.file_name().unwrap().to_string_lossy().into_owned();
        let (code, report) = run_validate(fixture, 0).map_err(|e| format!("{name}: {e}"))?;
        if code != 0 {
            return Err(format!("{name}: clean fixture exits {code}: {:?}", error_violations(&report)));
        }
        fixtures_run += 1;
        let twins: Vec<Value> = serde_json::from_str(
            &fs::read_to_string(fixture.join("twins.json")).map_err(|e| format!("{name}: {e}"))?,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        for twin in &twins {
            let tname = twin["name"].as_str().unwrap_or("?");
            let dir = tmp.path().join(&name).join(tname);
            copy_dir(fixture, &dir).map_err(|e| e.to_string())?;
            mutate(&dir.join("inputs"), twin).map_err(|e| format!("{name}/{tname}: {e}"))?;
            let (code, report) = run_validate(&dir, 0).map_err(|e| format!("{name}/{tname}: {e}"))?;
            let errors = error_violations(&report);
            let expect = &twin["expect"];
            let ok = code == 1
                && errors.len() == 1
                && errors[0]["constraint_id"] == expect["constraint_id"]
                && errors[0]["locus"] == expect["locus"];
            if !ok {
                return Err(format!("{name}/{tname}: exit {code}, got {errors:?}, want {expect}"));
            }
            twins_run += 1;
        }
    }
    Ok(format!(
        "{fixtures_run} fixtures clean ({} pattern codes), {twins_run} mutated twins fail at the expected constraint and locus",
        codes.len()
    ))
}

fn injection_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let corpora = 1000;
    let mut injected = 0;
    for i in 0..corpora {
        let p = CorpusParams {
            complexity: rng.random_range(1..=10),
            columns: rng.random_range(10..=20),
            rows: rng.random_range(100..=150),
            files: rng.random_range(1..=3),
            seed: rng.random(),
        };
        let corpus = generate_corpus(&p).map_err(|e| e.to_string())?;
        let k = rng.random_range(0..=8);
        let plan = plan_injections(&corpus, k, &[], rng.random()).map_err(|e| e.to_string())?;
        let dirty = inject_violations(&corpus, &plan).map_err(|e| e.to_string())?;
        let report = validate(&dirty.spec, &dirty.input_set(), &RunOptions::default()).map_err(|e| e.to_string())?;
        let det = score(&report, &plan);
        if !det.exact() {
            return Err(format!("corpus {i} ({p:?}): {det:?}"));
        }
        injected += k;
    }
    Ok(format!("{corpora} corpora, {injected} injections, precision = recall = 1.0"))
}

fn inference_soundness() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1f3);
    for i in 0..100 {
        let p = CorpusParams {
            complexity: rng.random_range(1..=10),
            columns: rng.random_range(10..=16),
            rows: rng.random_range(100..=140),
            files: rng.random_range(1..=2),
            seed: rng.random(),
        };
        let corpus = generate_corpus(&p).map_err(|e| e.to_string())?;
        let dir = tmp.path().join(format!("c{i}"));
        let inputs = dir.join("inputs");
        fs::create_dir_all(&inputs).map_err(|e| e.to_string())?;
        for (path, f) in &corpus.files {
            fs::write(inputs.join(path), f.render()).map_err(|e| e.to_string())?;
        }
        let spec = dir.join("inferred.yml");
        let out = bin()
            .args(["infer", "--check", "--inputs"])
            .arg(&inputs)
            .arg("--out")
            .arg(&spec)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.code() != Some(0) {
            return Err(format!("corpus {i}: infer --check exits {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
        // One out-of-range cell in a random numeric column of a random file.
        let data: Vec<&String> = corpus.data_files().map(|(p, _)| p).collect();
        let file = data[rng.random_range(0..data.len())];
        let (header, rows) = corpus.files[file].as_table().unwrap();
        let numeric: Vec<usize> = (0..header.len()).filter(|&c| header[c] != "category" && header[c] != "code").collect();
        let c = numeric[rng.random_range(0..numeric.len())];
        let r = rng.random_range(0..rows.len());
        let mut mutated = rows.to_vec();
        mutated[r][c] = "1000000007".into();
        let mut text = header.join(",") + "\n";
        for row in &mutated {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(inputs.join(file), text).map_err(|e| e.to_string())?;
        let out = bin()
            .args(["validate", "--format", "json", "--spec"])
            .arg(&spec)
            .arg("--inputs")
            .arg(&inputs)
            .output()
            .map_err(|e| e.to_string())?;
        let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("corpus {i}: {e}"))?;
        if out.status.code() != Some(1) || error_violations(&report).is_empty() {
            return Err(format!("corpus {i}: perturbed {file}:{r}:{} not reported", header[c]));
        }
    }
    Ok("100 corpora round-trip clean; every perturbation reported".into())
}

fn pattern_grammar() -> Outcome {
    let all = enumerate_single_source_codes();
    for c in &all {
        let back = parse_code(&c.to_string()).map_err(|e| e.to_string())?;
        if back != *c {
            return Err(format!("{c} does not round-trip"));
        }
    }
    if all.len() < 72 {
        return Err(format!("only {} codes", all.len()));
    }
    for ok in ["1.A.i", "4.C.ii", "4.C.iii", "14.A.ii"] {
        parse_code(ok).map_err(|e| format!("{ok}: {e}"))?;
    }
    if parse_code("1.A.iv").is_ok() {
        return Err("1.A.iv accepted".into());
    }
    Ok(format!("{} codes round-trip; accept/reject cases hold", all.len()))
}

fn scaling() -> Outcome {
    let base = CorpusParams {
        rows: 100,
        columns: 10,
        complexity: 5,
        ..CorpusParams::default()
    };
    let sweep: Sweep = "files=1:100".parse().map_err(|e: simguard_bench::BenchError| e.to_string())?;
    let cfg = ScalingConfig::new(base, sweep);
    let result = run_scaling(&cfg).map_err(|e| e.to_string())?;
    let fit = result.fit.ok_or("no fit")?;
    let pts: Vec<String> = result
        .points
        .iter()
        .map(|p| format!("{}:{:.2}ms", p.value, p.median_ms))
        .collect();
    let last = result.points.last().unwrap();
    let msg = format!(
        "R^2 = {:.4} over files {{{}}}; {:.0} rows/s at {} files",
        fit.r2,
        pts.join(", "),
        last.rows_per_sec,
        last.value
    );
    if fit.r2 >= 0.95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("generated_at");
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = generate_corpus(&CorpusParams {
        complexity: 10,
        files: 24,
        rows: 200,
        seed: 42,
        ..CorpusParams::default()
    })
    .map_err(|e| e.to_string())?;
    let plan = plan_injections(&corpus, 40, &[], 42).map_err(|e| e.to_string())?;
    let dirty = inject_violations(&corpus, &plan).map_err(|e| e.to_string())?;
    let dir = tmp.path().join("corpus");
    fs::create_dir_all(dir.join("inputs")).map_err(|e| e.to_string())?;
    for (path, f) in &dirty.files {
        fs::write(dir.join("inputs").join(path), f.render()).map_err(|e| e.to_string())?;
    }
    fs::write(dir.join("guard.yml"), &dirty.spec_yaml).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for d in [dir.clone(), fixtures().join("flee_manual")] {
        let (_, mut a) = run_validate(&d, 1)?;
        let (_, mut b) = run_validate(&d, 8)?;
        strip_timing(&mut a);
        strip_timing(&mut b);
        let (a, b) = (serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        if a != b {
            return Err(format!("{}: reports differ between --jobs 1 and --jobs 8", d.display()));
        }
        checked += 1;
    }
    Ok(format!("{checked} input sets give byte-identical reports at --jobs 1 and 8"))
}

fn suggestion_loop() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inputs = fixtures().join("flee_manual/inputs");
    let spec = tmp.path().join("inferred.yml");
    let out = bin().args(["infer", "--inputs"]).arg(&inputs).arg("--out").arg(&spec).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let out = bin()
        .args(["suggest", "--provider", "mock", "--format", "json", "--inputs"])
        .arg(&inputs)
        .arg("--spec")
        .arg(&spec)
        .output()
        .map_err(|e| e.to_string())?;
    let body: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let comparison = body["comparison"].as_array().ok_or("no comparison")?;
    if comparison.is_empty() || comparison.iter().any(|c| c["status"] != "exact_match") {
        return Err(format!("infer task: {comparison:?}"));
    }
    let out = bin()
        .args(["suggest", "--provider", "mock", "--format", "json", "--inputs"])
        .arg(&inputs)
        .args(["--describe", "Route distances must be positive numbers"])
        .output()
        .map_err(|e| e.to_string())?;
    let body: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let hit = body["suggestions"].as_array().into_iter().flatten().any(|d| {
        d["on"] == "routes" && d["kind"] == "column" && d["params"]["column"] == "distance" && d["params"]["gt"] == 0
    });
    if !hit {
        return Err(format!("describe task: {}", body["suggestions"]));
    }
    Ok(format!("{} infer suggestions all exact_match; description yields routes.distance gt 0", comparison.len()))
}

fn summation_tolerance() -> Outcome {
    let spec = GuardSpec::parse(
        "guard.yml",
        "name: sums\nfiles:\n  p: p.csv\nconstraints:\n  - {id: p.sum, kind: summation, on: p, params: {axis: per_row, columns: all_but_first, target: 1, tolerance: 0.01}}\n",
        Path::new("."),
    )
    .map_err(|e| e.to_string())?;
    let check = |a: &str, b: &str| -> Result<bool, String> {
        let mut inputs = InputSet::default();
        inputs.insert("p.csv", format!("category,a,b\nx,{a},{b}\n"));
        let report = validate(&spec, &inputs, &RunOptions::default()).map_err(|e| e.to_string())?;
        Ok(!report.has_failures())
    };
    for (a, b) in [("0.49", "0.5"), ("0.5", "0.51"), ("0.5", "0.5"), ("0.3", "0.695"), ("0.7", "0.305")] {
        if !check(a, b)? {
            return Err(format!("{a} + {b} rejected"));
        }
    }
    for (a, b) in [("0.489", "0.5"), ("0.5", "0.511")] {
        if check(a, b)? {
            return Err(format!("{a} + {b} accepted"));
        }
    }
    Ok("sums 0.99, 0.995, 1.0, 1.005, 1.01 accepted; 0.989 and 1.011 rejected".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 exemplar pack parity", exemplar_parity),
        ("2 injection oracle", injection_oracle),
        ("3 inference soundness", inference_soundness),
        ("4 pattern grammar", pattern_grammar),
        ("5 scaling linearity", scaling),
        ("6 determinism across jobs", determinism),
        ("7 offline suggestion loop", suggestion_loop),
        ("8 summation tolerance", summation_tolerance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
