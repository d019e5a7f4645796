//! Shared fixtures for the integration and acceptance suites: scripted
//! backend layouts, stub checker executables, and the canned test bodies
//! that drive the fixture corpus to full coverage.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use legacy_forge_core::config::{BackendConfig, RunConfig};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus_dir() -> PathBuf {
    fixtures_dir().join("corpus")
}

pub fn golden_dir() -> PathBuf {
    fixtures_dir().join("golden")
}

/// A generation response: prose plus one fenced C block.
pub fn gen_response(code: &str) -> String {
    format!("Here are the tests.\n```c\n{code}```\n")
}

/// A reflection response in the rigid RATING/PLAN schema.
pub fn reflect_response(rating: u8, plan: &str) -> String {
    format!("RATING: {rating}\nPLAN: {plan}\n")
}

/// Write one target's ordered response script under `script_root/<target>/`.
pub fn write_script(script_root: &Path, target: &str, responses: &[String]) {
    let dir = script_root.join(target);
    std::fs::create_dir_all(&dir).unwrap();
    for (i, r) in responses.iter().enumerate() {
        std::fs::write(dir.join(format!("{i:03}.txt")), r).unwrap();
    }
}

/// The standard clean-target script: four generations of the same adequate
/// suite, reflections after each.
pub fn steady_script(code: &str) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..4 {
        out.push(gen_response(code));
        out.push(reflect_response(8, &format!("iteration {} complete", i + 1)));
    }
    out
}

/// Create an executable stub checker script.
pub fn write_stub_checker(dir: &Path, name: &str, body: &str) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Checker stub that reports a decisive safe verdict instantly.
pub fn ok_checker(dir: &Path) -> PathBuf {
    write_stub_checker(dir, "checker_ok.sh", "echo 'VERIFICATION SUCCESSFUL'\nexit 0")
}

pub fn base_config(corpus: &Path, script_root: &Path, out_dir: &Path, checker: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(
        vec![corpus.to_path_buf()],
        BackendConfig::Scripted {
            script_dir: script_root.to_path_buf(),
        },
        out_dir.to_path_buf(),
    );
    cfg.verifier.executable = checker.to_path_buf();
    cfg
}

// ---- canned adequate suites for the fixture corpus ----

pub const CLAMP_ADD_TESTS: &str = "\
void test_clamp_high(void) {
    TENX_ASSERT(clamp_add(90, 20) == 100);
}
void test_clamp_low(void) {
    TENX_ASSERT(clamp_add(-90, -20) == -100);
}
void test_clamp_mid(void) {
    TENX_ASSERT(clamp_add(1, 2) == 3);
}
";

pub const ABS_DIFF_TESTS: &str = "\
void test_abs_gt(void) {
    TENX_ASSERT(abs_diff(5, 2) == 3);
}
void test_abs_lt(void) {
    TENX_ASSERT(abs_diff(2, 5) == 3);
}
void test_abs_eq(void) {
    TENX_ASSERT(abs_diff(4, 4) == 0);
}
";

pub const SAFE_DIV_TESTS: &str = "\
void test_div_zero_den(void) {
    TENX_ASSERT(safe_div(5, 0) == 0);
}
void test_div_mixed(void) {
    TENX_ASSERT(safe_div(-8, 2) == -4);
}
void test_div_pos(void) {
    TENX_ASSERT(safe_div(8, 2) == 4);
}
void test_div_neg(void) {
    TENX_ASSERT(safe_div(-8, -2) == 4);
}
void test_div_zero_num(void) {
    TENX_ASSERT(safe_div(0, 5) == 0);
}
";

pub const COUNT_BITS_TESTS: &str = "\
void test_bits_zero(void) {
    TENX_ASSERT(count_bits(0u) == 0);
}
void test_bits_five(void) {
    TENX_ASSERT(count_bits(5u) == 2);
}
void test_bits_all(void) {
    TENX_ASSERT(count_bits(0xffffffffu) == 32);
}
";

pub const PARITY_BIT_TESTS: &str = "\
void test_parity_odd(void) {
    TENX_ASSERT(parity_bit(7u) == 1);
}
void test_parity_even(void) {
    TENX_ASSERT(parity_bit(3u) == 0);
}
void test_parity_zero(void) {
    TENX_ASSERT(parity_bit(0u) == 0);
}
";

pub const IS_LEAP_YEAR_TESTS: &str = "\
void test_leap_400(void) {
    TENX_ASSERT(is_leap_year(2000) == 1);
}
void test_leap_100(void) {
    TENX_ASSERT(is_leap_year(1900) == 0);
}
void test_leap_4(void) {
    TENX_ASSERT(is_leap_year(2024) == 1);
}
void test_leap_plain(void) {
    TENX_ASSERT(is_leap_year(2023) == 0);
}
";

pub const MEDIAN3_TESTS: &str = "\
void test_median_sorted(void) {
    TENX_ASSERT(median3(1, 2, 3) == 2);
}
void test_median_reversed(void) {
    TENX_ASSERT(median3(3, 2, 1) == 2);
}
";

pub const SUM_RANGE_TESTS: &str = "\
void test_sum_forward(void) {
    TENX_ASSERT(sum_range(1, 3) == 6);
}
void test_sum_swapped(void) {
    TENX_ASSERT(sum_range(3, 1) == 6);
}
void test_sum_single(void) {
    TENX_ASSERT(sum_range(5, 5) == 5);
}
";

pub const WRAP_INDEX_TESTS: &str = "\
void test_wrap_basic(void) {
    TENX_ASSERT(wrap_index(5, 3) == 2);
}
void test_wrap_negative(void) {
    TENX_ASSERT(wrap_index(-1, 3) == 2);
}
void test_wrap_bad_len(void) {
    TENX_ASSERT(wrap_index(5, 0) == -1);
}
void test_wrap_zero(void) {
    TENX_ASSERT(wrap_index(3, 3) == 0);
}
";

pub const GRADE_BAND_PARTIAL_1: &str = "\
void test_grade_invalid(void) {
    TENX_ASSERT(grade_band(-5) == -1);
}
void test_grade_top(void) {
    TENX_ASSERT(grade_band(95) == 4);
}
";

pub const GRADE_BAND_PARTIAL_2: &str = "\
void test_grade_invalid(void) {
    TENX_ASSERT(grade_band(-5) == -1);
}
void test_grade_top(void) {
    TENX_ASSERT(grade_band(95) == 4);
}
void test_grade_third(void) {
    TENX_ASSERT(grade_band(75) == 3);
}
";

pub const GRADE_BAND_FULL: &str = "\
void test_grade_invalid(void) {
    TENX_ASSERT(grade_band(-5) == -1);
}
void test_grade_top(void) {
    TENX_ASSERT(grade_band(95) == 4);
}
void test_grade_third(void) {
    TENX_ASSERT(grade_band(75) == 3);
}
void test_grade_second(void) {
    TENX_ASSERT(grade_band(55) == 2);
}
void test_grade_first(void) {
    TENX_ASSERT(grade_band(10) == 1);
}
";

/// Adequate suite for every corpus target; `grade_band` converges at
/// iteration 3 to exercise the improvement loop.
pub fn corpus_scripts(script_root: &Path) {
    let steady: &[(&str, &str)] = &[
        ("clamp_add", CLAMP_ADD_TESTS),
        ("abs_diff", ABS_DIFF_TESTS),
        ("safe_div", SAFE_DIV_TESTS),
        ("count_bits", COUNT_BITS_TESTS),
        ("parity_bit", PARITY_BIT_TESTS),
        ("is_leap_year", IS_LEAP_YEAR_TESTS),
        ("median3", MEDIAN3_TESTS),
        ("sum_range", SUM_RANGE_TESTS),
        ("wrap_index", WRAP_INDEX_TESTS),
    ];
    for (target, code) in steady {
        write_script(script_root, target, &steady_script(code));
    }
    write_script(
        script_root,
        "grade_band",
        &[
            gen_response(GRADE_BAND_PARTIAL_1),
            reflect_response(3, "cover the 70-89, 50-69 and below-50 bands"),
            gen_response(GRADE_BAND_PARTIAL_2),
            reflect_response(5, "cover the 50-69 band and the lowest band"),
            gen_response(GRADE_BAND_FULL),
            reflect_response(8, "coverage complete"),
            gen_response(GRADE_BAND_FULL),
            reflect_response(8, "keep the suite"),
        ],
    );
}
