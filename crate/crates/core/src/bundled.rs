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

//! Fixture files compiled into the binary.

use crate::bank::QuestionBank;
use crate::scale::Scale;

pub const SCALE_JSON: &str = include_str!("../../../fixtures/scale-internet-2014.json");
pub const BANK_JSON: &str = include_str!("../../../fixtures/bank-2014.json");
pub const TABLE2_JSON: &str = include_str!("../../../fixtures/table2.json");
pub const TABLE3_JSON: &str = include_str!("../../../fixtures/table3.json");
pub const TABLE4_EXPECTED_JSON: &str = include_str!("../../../fixtures/table4_expected.json");
pub const GOOGLE_BEHAVIOR_JSON: &str = include_str!("../../../fixtures/behavior/google.json");

pub fn scale() -> Scale {
    Scale::from_json(SCALE_JSON).expect("bundled scale parses")
}

pub fn bank() -> QuestionBank {
    QuestionBank::from_json(BANK_JSON).expect("bundled bank parses")
}
