//! Prompt templates for bug generation and for the bug-fixing model input.
//!
//! Placeholders are substituted in a single left-to-right pass, so SQL that
//! happens to contain a placeholder name is copied verbatim and never
//! expanded a second time.

/// Prompt asking a code LLM to inject an error into a target SQL.
pub const BUG_GENERATION_TEMPLATE: &str = "\
Based on the SCHEMAS and TARGET SQL, help to generate the error sql which are related to SCHEMAS and similar to TARGET SQL. The generated error sql should contain error related to ERROR INFO. You should obey the following RULES.

RULES
1. If the SCHEMAS are empty, it means the TARGET SPARK SQL is not related to any schemas.
2. ERROR INFO should not be appeared in explanation.
3. Except for error part of code, other parts of code should be same between correct sql and error sql.
4. Comments and indents in generated error sql and correct sql should be the same.
5. If it is hard to generate error sql which is similar to the TARGET SQL related to ERROR INFO, please return no in suitable field, otherwise it should be yes.

Below is a brief example which you can refer to (if the slots of example is empty please ignore Example section):

[EXAMPLE]

target sql:

TARGET_SQL_EXAMPLE_PLACEHOLDER

error info:

ERROR_INFO_EXAMPLE_PLACEHOLDER

error sql:

ERROR_SQL_EXAMPLE_PLACEHOLDER

Now give you the tables schema, corresponding target SQL and error type information as below.

Please write a error SQL that match the error type information.

[SCHEMAS]

SCHEMAS_PLACEHOLDER

[TARGET SPARK SQL]

TARGET_SPARK_SQL_PLACEHOLDER

[ERROR INFO]

ERROR_INFO_PLACEHOLDER

RESPONSE REQUIREMENT

Return json str which can be parsed by json.loads() of python3 as following:

{\"error sql\": \"\", \"correct sql\": \"\", \"reason\": \"\", \"suitable\": \"\"}
";

/// Input prompt of the bug-fixing model. The final `Response:` line is part
/// of the input; the model's output starts on the next line.
pub const BUG_FIX_TEMPLATE: &str = "\
Requirements: Directly generate the right SQL.

[TABLES SCHEMA]

TABLES_SCHEMA_PLACEHOLDER

[BUG SQL]

BUG_SQL_PLACEHOLDER

[ERROR MESSAGE]

ERROR_MESSAGE_PLACEHOLDER

Question: BUGFIX task

Based on the error SQL code, error messages, and input table schema, please fix the bugs and write the corresponding correct SQL code. Remember not to change any existing comments and SQL code without errors.

Response:
";

/// Few-shot example slot of the generation prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GenExample {
    pub target_sql: String,
    pub error_info: String,
    pub error_sql: String,
}

/// Replaces each `(placeholder, value)` occurrence in one pass. Placeholders
/// that are prefixes of each other are resolved longest-first.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut ordered: Vec<&(&str, &str)> = slots.iter().collect();
    ordered.sort_by_key(|(name, _)| std::cmp::Reverse(name.len()));
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while !rest.is_empty() {
        // Earliest occurrence of any placeholder.
        let next = ordered
            .iter()
            .filter_map(|(name, value)| rest.find(name).map(|at| (at, *name, *value)))
            .min_by_key(|(at, name, _)| (*at, std::cmp::Reverse(name.len())));
        match next {
            Some((at, name, value)) => {
                out.push_str(&rest[..at]);
                out.push_str(value);
                rest = &rest[at + name.len()..];
            }
            None => {
                out.push_str(rest);
                break;
            }
        }
    }
    out
}

pub fn render_bug_generation_prompt(
    schema_ddl: &[String],
    target_sql: &str,
    error_info: &str,
    example: Option<&GenExample>,
) -> String {
    let empty = GenExample::default();
    let example = example.unwrap_or(&empty);
    let schemas = schema_ddl.join("\n");
    fill(
        BUG_GENERATION_TEMPLATE,
        &[
            ("TARGET_SQL_EXAMPLE_PLACEHOLDER", &example.target_sql),
            ("ERROR_INFO_EXAMPLE_PLACEHOLDER", &example.error_info),
            ("ERROR_SQL_EXAMPLE_PLACEHOLDER", &example.error_sql),
            ("SCHEMAS_PLACEHOLDER", &schemas),
            ("TARGET_SPARK_SQL_PLACEHOLDER", target_sql),
            ("ERROR_INFO_PLACEHOLDER", error_info),
        ],
    )
}

pub fn render_bug_fix_prompt(schema_ddl: &[String], bug_sql: &str, error_message: &str) -> String {
    let schemas = schema_ddl.join("\n");
    fill(
        BUG_FIX_TEMPLATE,
        &[
            ("TABLES_SCHEMA_PLACEHOLDER", &schemas),
            ("BUG_SQL_PLACEHOLDER", bug_sql),
            ("ERROR_MESSAGE_PLACEHOLDER", error_message),
        ],
    )
}
