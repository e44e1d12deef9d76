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

use scraper::{Html, Selector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("malformed selector `{rule}`: {reason}")]
    BadRule { rule: String, reason: String },
    #[error("no element matches `{0}`")]
    NoMatch(String),
}

/// Text of the first node matching a CSS selector, whitespace-collapsed.
pub fn extract_first_result(document: &str, rule: &str) -> Result<String, ExtractError> {
    let selector = Selector::parse(rule).map_err(|e| ExtractError::BadRule {
        rule: rule.to_string(),
        reason: e.to_string(),
    })?;
    let html = Html::parse_document(document);
    let node = html
        .select(&selector)
        .next()
        .ok_or_else(|| ExtractError::NoMatch(rule.to_string()))?;
    let text = node.text().collect::<Vec<_>>().join(" ");
    Ok(text.split_whitespace().collect::<Vec<_>>().join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"<html><body><ol id="results">
        <li class="g"><h3>First</h3><span class="st">alpha   one</span></li>
        <li class="g"><h3>Second</h3><span class="st">beta</span></li>
        <li class="g"><h3>Third</h3><span class="st">gamma</span></li>
        </ol></body></html>"#;

    #[test]
    fn first_of_three() {
        assert_eq!(extract_first_result(THREE, "#results li.g").unwrap(), "First alpha one");
        assert_eq!(extract_first_result(THREE, "li.g .st").unwrap(), "alpha one");
    }

    #[test]
    fn zero_matches() {
        assert_eq!(
            extract_first_result(THREE, "div.result"),
            Err(ExtractError::NoMatch("div.result".into()))
        );
    }

    #[test]
    fn malformed_rule() {
        assert!(matches!(extract_first_result(THREE, "li[["), Err(ExtractError::BadRule { .. })));
    }

    #[test]
    fn serp_2014_fixture() {
        let page = include_str!("../../../../fixtures/serp/results-2014.html");
        let expected = include_str!("../../../../fixtures/serp/results-2014.expected.txt");
        let got = extract_first_result(page, "#ires li.g").unwrap();
        assert_eq!(got, expected.trim_end());
    }
}
