//! Generation prompt templates and single-pass placeholder substitution.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("placeholder {{{0}}} unfilled")]
    Unfilled(String),
    #[error("template has no placeholder {{{0}}}")]
    MissingPlaceholder(String),
}

/// Replaces `{name}` placeholders in one left-to-right pass, so substituted
/// values are never re-scanned. Every placeholder must have a non-blank value
/// and every supplied name must occur in the template.
pub fn fill(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    for (name, value) in values {
        if !template.contains(&format!("{{{name}}}")) {
            return Err(PromptError::MissingPlaceholder((*name).to_string()));
        }
        if value.trim().is_empty() {
            return Err(PromptError::Unfilled((*name).to_string()));
        }
    }
    let mut out = String::with_capacity(template.len() + values.iter().map(|v| v.1.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let matched = after.find('}').and_then(|close| {
            let name = &after[..close];
            values.iter().find(|(n, _)| *n == name).map(|(_, v)| (close, *v))
        });
        match matched {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Text-rich document QA prompt. Placeholders: `{json_string}`, `{min_pairs}`, `{template}`.
pub const DOC_QA: &str = "You are a document data visual question-answering dialogue generation system. Your main task is to design instructions and corresponding answers based on the OCR layout information of the provided document image, so that when the obtained multimodal data is used for model training, the model can fully learn the multimodal document understanding ability.

Here is the OCR layout information extracted from a research report document image: {json_string}. Please imagine that you are looking at the corresponding image instead of a simple json string based on the content (text-related characters are recognized by line, please fully splice and understand it), and then combine the information in the image to design instructions and answers from the perspective of professional research report readers.

When generating these dialogues, please make sure to follow the following guidelines:

These instructions must meet the following requirements:

1. Instructions focus on the ability to extract information from document images, and the answers can be directly observed from the image.

2. Instructions and answers must be highly relevant to the image, and instructions cannot be answered without the image. If the instruction provides too much information from the image, so that the instruction can be answered without the image, it is strictly prohibited.

3. The instructions must be generated based on the information in the image, and the accurate answer can be obtained in combination with the image content.

4. The text characters in the provided OCR layout information contain the exact answer to the answer. Please strictly ensure that the answer is correct, otherwise do not generate the instruction and answer.

5. For each layout area type (printed text, tables, charts, printed formulas, seals), if the document contains this type of information, then please generate instructions based on this type of content, otherwise no need to generate.

6. The answer to the instruction should be as concise and accurate as possible. Do not repeat the question and reply directly to the answer. At the same time, ensure that the answer is directly obtained from the original text of the image, and do not summarize.

7. Instructions and questions should not contain information about the layout structure.

8. Instructions should directly give questions, and do not use words such as 'Please ask', 'Please answer', and 'In the document'.

9. When generating instructions related to tables, if the table contains relevant information such as units, percentages, positive and negative signs, please ensure the completeness of the answer.

Please generate at least {min_pairs} Chinese instructions and answers. You need to provide the generated content in JSON format. Please make sure that ```json``` is included in the output. You can refer to the following sample to organize your output: {template}.
";

/// Chart QA prompt. Placeholders: `{chart_type}`, `{code}`, `{table_data}`, `{task_types}`, `{template}`.
pub const CHART_QA: &str = "You are a highly intelligent AI familiar with data visualization and {chart_type}.

Below is the matplotlib code for the {chart_type} chart: {code} and the corresponding table data: {table_data}.

Please imagine that you are looking at the image generated by the code, not the code itself.

Please generate questions of different task types based on the content of the chart.

The task type is {task_types}.

Remember that in your answer, only the image of the chart is given, and your answer is based on the image. The table data is the real value of the relevant numerical value in the image, so make sure the answer is correct.

The value and label of the question are the real basis of your question, so make sure the answer is correct.

Avoid using invalid escape characters in strings.

Use approximate color names instead of hexadecimal colors.
If there are units, % and other information in the chart, please ensure the integrity of the units , % and other information in the answer.

In addition, I hope to save your output as a json file, so I hope you can organize your answer like {template}, and make sure the values of human and gpt in json are all in Chinese.
";

/// Chart mutation prompt. Placeholders: `{a_chart}`, `{chart}`, `{code}`,
/// `{only_rule}`, `{topics_pool}`, `{schema}`.
///
/// With `a_chart = "an area chart"`, `chart = "area chart"` and the area
/// `only_rule`, the seven numbered options read exactly as the published area
/// prompt. The closing paragraph asks for a JSON chart specification instead
/// of runnable plotting code.
pub const CHART_MUTATION: &str = "You are a highly intelligent AI familiar with data visualization and matplotlib.

Given the following matplotlib code of {a_chart}: {code}. Please generate a diversified version of this matplotlib code of {chart}. Here are some options you should follow:
1. Generate data points that fit the chart and the number of data points should be as much as you can to provide, but you should not skip any data point in your code. Do not add any comment in your code.
2. Add or change some data point with new corresponding values to enrich the visualization and print the final table data you use in the code within triple backticks (```), and don't include things like csv, plaintext in the triple backticks (```).
3. Modify the color scheme using specific color codes (e.g., #RRGGBB) for better clarity or visual appeal. Avoid using color categories.
4. Change width and height of the chart reasonably.
5. Change the topic, headline, and data type (which fit the topic) of the chart, put the headline in an appropriate place that does not overlap with other things (make sure the headline does not overlap with the legend! Put these two things away), you can refer and choose one (not all) of the topics from: {topics_pool}, but reduce using global topic, do not use temperature.
6. {only_rule}
7. Assign annotation/text label on the chart. Do not use random data.
You should choose some of these options, not all of them, to diversify the visualization.
Different data points should have different values.
You should give FULL code with ALL data points and don't miss any detail.
Make sure the legend appears completely in the chart after the code is rendered.
Print table data first in Chinese, the table data format should be able to directly write in csv file, then print the chart specification (keep the topic, headline, and data type (which fit the topic) of the chart in Chinese) as JSON within ```json``` following this schema: {schema}.
";

/// Table QA prompt. Placeholders: `{html_code}`, `{template}`.
pub const TABLE_QA: &str = "This is a table chart displayed by html code: {html_code}.
Please generate questions of different task types about the chart, and make sure that the answers to the questions can be clearly obtained from the chart, otherwise you can choose not to select the corresponding task.

The selectable task types and their explanations are as follows:

Factoid: Asks a specific fact, the answer comes from a fragment in the table or a value obtained by aggregation.

Free Form: The answer has no fixed format, is usually longer, and is similar to a conversation, such as ChatGPT.

Multiple Choice: The question requires selecting one of multiple options as an answer.

List: The answer requires providing a series of related items, usually from multiple rows or columns in a table.

Yes/No: The answer to the question can only be 'yes' or 'no'.

Explanation: The answer requires explaining specific data or trends in the table.

Comparison: The answer requires comparing two or more values in the table.

Causal: The answer requires explaining the causal relationship between the data in the table.

Computation: The answer requires some calculations, such as sum, average, etc.

Classification: According to the question, classify or categorize some data in the table.

Time Series: The answer requires analyzing the time series data in the table, such as trends, patterns, etc.

You need to imagine that you are looking at an image rendered by the code, not the code itself. Remember in your answer, all you are given is an image of a graph, and you are answering based on the image.

The values and labels are the ground truth of your question, so make sure the answer is correct.
Avoid using invalid escape characters in strings.
Also, I want to save your output to a json file, so I want you to organize your answer like
{template} and must include the answer in ```json``` format.
";
