// Copyright 2026 The uiq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Compiles and runs a small C program against the generated header and
//! the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "uiq.h"

int main(void) {
    UiqScale *scale = NULL;
    if (uiq_scale_load(NULL, &scale) != UIQ_STATUS_OK) return 10;
    unsigned int google[15] = {100,100,100,75,100,100,0,0,0,0,0,0,100,0,0};
    int64_t iq = 0;
    if (uiq_compute_iq(scale, google, 15, &iq) != UIQ_STATUS_OK) return 11;
    int64_t cats[4];
    if (uiq_category_breakdown(scale, google, 15, cats) != UIQ_STATUS_OK) return 12;
    int64_t unused = 0;
    UiqStatus s = uiq_compute_iq(scale, google, 3, &unused);
    const char *err = uiq_last_error();
    printf("iq=%lld cats=%lld,%lld,%lld,%lld status=%d err=%s\n",
           (long long)iq, (long long)cats[0], (long long)cats[1], (long long)cats[2], (long long)cats[3],
           (int)s, err ? err : "(none)");
    uiq_scale_free(scale);
    return 0;
}
"#;

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().map(|_| cc)
}

#[test]
fn header_compiles_and_links() {
    let Some(cc) = compiler() else {
        panic!("no C compiler found; set CC to run this test");
    };
    let lib_dir = artifact_dir();
    assert!(
        lib_dir.join("libuiq_ffi.so").exists() || lib_dir.join("libuiq_ffi.dylib").exists(),
        "shared library missing in {}",
        lib_dir.display()
    );
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = tempfile_dir();
    let src = work.join("smoke.c");
    let bin = work.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();

    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-luiq_ffi")
        .status()
        .unwrap();
    assert!(status.success(), "C program failed to build");

    let out = Command::new(&bin)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.trim(),
        "iq=2650 cats=1000,1350,0,300 status=5 err=score vector has 3 values, scale has 15 subtests"
    );
    let _ = std::fs::remove_dir_all(&work);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("uiq-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
