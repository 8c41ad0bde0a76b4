"""Prompt templates for every LLM-facing stage.

Each template carries a distinctive header phrase so scripted mocks can key
on the stage, and each demands strict JSON (or a fixed marker) so responses
stay machine-parseable. Literal braces inside JSON examples are doubled for
``str.format``.
"""
from __future__ import annotations

JSON_REMINDER = "\n\nRespond with valid JSON only, no prose and no code fences."


DESCRIBE_TEMPLATE = """\
Given a database schema regarding "{table_name}", your task is to analyse all columns \
in the database and add detailed explanations for database and each column.

Requirements:
1. Response should include column names and the specific meanings of each column to help \
users better understand the data content.
2. Response format example:
{{
    "Table_Description": ...,
    "Column_Description": [
        {{"column_name": "Age", "specific_meaning": "Represents User's Age."}},
        {{"column_name": "Joined Date", "specific_meaning": "The date on which the user joined."}},
        {{"column_name": "Gender", "specific_meaning": "User's Gender, with 2 categories."}},
        {{"column_name": "City", "specific_meaning": "City where the user resides, with 32 categories and only one category example displayed."}}]
}}

Definition of fields:
**Table_Description**: Explain the main content and possible uses of the table.
**Column_Description**: Explain the meaning of each column.
Ensure that the response format is a compact and valid JSON format without any additional \
explanations, escape characters, line breaks, or backslashes.

### Database Schema
{table_schema}

Please response in **JSON** format complying with the above requirements.
"""


DECOMPOSE_TEMPLATE = """\
As an experienced and professional data analysis assistant, your goal is to analyze a \
user's question and identify the relevant columns that might contain the necessary data \
to answer user's question based on the table schema. The table schema consists of table \
descriptions and multiple column descriptions.

Specifically, you need to complete two sub tasks:
[task1]
Thoroughly understand and analyze user's question. You should orient your approach towards \
resolving user query by referencing the information provided in the table schema, and \
break down the original query into more specific, complete and executable sub-queries.
[task2]
For each query to be answered, identify and extract the relevant columns from the \
`column_list` field in the table schema that are necessary to answer the query.

### Instruction
[task1 Instruction]
- You should attempt to decompose the original query into more specific, progressively \
detailed, step-by-step sub-queries. Ensure the sub-queries maintain high relevance to the \
original query and executability to table retrieval, and confirm that no critical \
information is omitted.
- You can recognize key entities, intentions, special reminders, and specific objects from \
user's question, which can help you accurately analyze user issues.
- Ensure that each query can be answered by retrieving relevant values from the table.
- Pay attention to the expression of the maximum value (maximum/top/highest/most/lowest/\
smallest/last, etc) in user's query.

[task2 Instruction]
- Identify one or more relevant columns from the `column_list` field in the table schema \
that are necessary to answer each query.
- Distinguish between easily confused column names, and refer to column descriptions and \
example values if necessary, to ensure the accuracy of the relevant columns extracted.
- The user's terminology may have multiple meanings or their expression might be \
ambiguous. In such cases, try to infer the most likely intent from the user's query and \
provide all potentially relevant columns.
- When queries are vague or ambiguous, attempt to infer the most likely intent based on \
the user's question and the table description, and provide all potentially relevant \
columns as comprehensively as possible.
- Ensure no necessary columns are omitted.
- Please reflect and ensure that the extracted column names must exist in the table \
schema (`Field: column_list`). Prohibit modification and avoid any illusions to ensure \
that the relevant values can be read from the table.

### Output format
Please answer with a list of sub_queries in JSON format **without any additional explanation**.

Examples:
**Question**: What are the average sales, cost, and profit per order for children's food?
**Response**: [
    {{"Query1": "Filter the data to include only orders related to children's food.", "relevant_column_list": ["product_category"]}},
    {{"Query2": "Calculate the average sales per order for children's food.", "relevant_column_list": ["sales"]}},
    {{"Query3": "Calculate the average cost per order for children's food.", "relevant_column_list": ["cost"]}},
    {{"Query4": "Calculate the average profit per order for children's food.", "relevant_column_list": ["profit"]}}
]

**Question**: What is the average concentration of PM2.5 in Sichuan Province in January 2015?
**Response**: [
    {{"Query1": "Select data from January 2015.", "relevant_column_list": ["date<the Gregorian calendar>"]}},
    {{"Query2": "Further filter the data of Sichuan Province from the results of Query1.", "relevant_column_list": ["province"]}},
    {{"Query3": "Calculate the average concentration of PM2.5.", "relevant_column_list": ["PM2.5"]}}
]

### Let's begin!
**Table Schema**
{table_schema}

Response the user's question `{query}` strictly follow the above guidelines.
**Question**: {query}
**Response**: \
"""


SUMMARY_TEMPLATE = """\
Based on the following thought process records, generate the Final Answer of the user \
query "{query}" to the table.
### Rules
1. Thoroughly analyze the connection between the query and the thought process, and \
extract the correct Final Answer.
2. Determine the data type of Final Answer based on the understanding of user question. \
The data type of Final Answer must be one of the following:
    - Boolean: Valid answers include "True" or "False" (must be string).
    - Category: A category value (e.g., "Bryin", "try your best!").
    - Number: A numerical value, which may represent a computed statistic (e.g., average, maximum).
    - List: A list containing numbers or categories. The expected format example is: \
['real estate', 'investments', 'pharmaceuticals', 'software'].
3. Output the Final Answer directly without any prefix words or explanations. Your Final \
Answer's data type must be a number, a category, or a list. Answer with a complete \
sentence in Final Answer is strictly prohibited.

### Attention! The data type is just for reference to help you provide the correct format \
of the Final Answer. The Final Answer content should be derived from the information in \
the thought process records. Here are your thought process records:
{thought_process}

=========

### User Query

Query: {query}

Final Answer: \
"""


JUDGE_TEMPLATE = """\
As an intelligent assistant for table analysis, your primary task is to analyze the table \
schema and assist in answering questions based on the data. To perform this, follow these \
guidelines:
1. You cannot view the table directly. However, you are provided with schema details and \
some sample cell values.
2. Use these schema details to frame relevant Python queries that progressively solve the \
user's question.
3. Strictly adhere to the structured format below to document your thought process, \
actions, observations, and responses.

**Provided Information**:
Schema Retrieval Results:
{table_schema}

**Thinking Format**:
 - Query: Input question that needs to be answered.
 - Thought: You should always think about what to do and clearly state that.
 - Action: Generate concrete Python-based ideas based on table schema retrieval results \
to get the observation or answer.
 - Observation: Provide observations or results from the action. If unavailable, note the \
missing information or ambiguities.
(Repeat the Thought/Action/Observation steps as needed)
 - Thought: After sufficient observations, decide if the original input question can be \
answered. If so, articulate the response based on the findings.
 - Response: Present a concise and accurate answer to the original input question.

**Task**:
Given the table schema retrieval results above, analyze the input question and generate \
the thought or response in the structured format.

**Input Question**:
{query}

**Thinking Process Records**:
{history_thinking}

(Remember! Make sure your brief output always adheres to one of the following two formats:
A. If the answer to the question can be obtained or inferred from thinking process \
records, indicating you have completed the task, please output:
**Thought**: 'I have completed the task'
**Response**:

B. Otherwise, please further rewrite and generate an **improved and clearer query** of \
the user's target question `{query}` based on previous thinking without explanation, and \
point out potential considerations and error prone points that need to be noted, making \
it easier for LLMs to understand and analyse, please output:

**Query**:
)
"""

COMPLETION_MARKER = "I have completed the task"


ZICL_TEMPLATE = """\
You are an assistant tasked to response the question asked of a given Table in markdown \
format. Before providing your response, you need to fully understand and utilize the \
information contained in the Table. You must response in a single JSON with your answer \
to the question and your explanation:
* "answer": answer using information from the provided Table only.
* "explanation": A short explanation on why you gave that answer.

### Answer Requirements:
1. Determine the data type of answer based on the understanding of user question. The \
data type of answer must be one of the following:
 - Boolean: Valid answers include "True" or "False" (must be string).
 - Category: A category value.
 - Number: A numerical value, which may represent a computed statistic (e.g., average, maximum).
 - List: A list containing numbers or categories. The expected format example is: \
['real estate', 'investments', 'pharmaceuticals', 'software'].
2. Output the response directly without any prefix words or explanations.
3. The answer value in response must be derived from the values extracted from the \
provided data, and any unnecessary rewriting, expansion or format conversion is not allowed.

### Response Format:
Question: What is the name of the richest passenger?
Table:
\"\"\"
| passenger | wealth($) |
| --- | --- |
| value1 | value2 |
\"\"\"
Response: {{
    "answer": "value1",
    "explanation": ""
}}

Now let's start!

Question: {question}
Table:
\"\"\"
{table_data}
\"\"\"
Response: \
"""


CODE_TEMPLATE = """\
You are a professional programming assistant designed to utilize the Python package \
`pandas` to analyze the table and Response efficient and robust Python code for answering \
user's Question. The code will read the file from the given `Table_path` and perform data \
extraction.

You should act in accordance with the following requirements:
1. Generate chain-of-thought execution ideas based on the understanding of the table \
content and the user's Question. Describe in detail the algorithm steps as much as \
possible, including Question analysis, table data format parsing method and code logic \
description.
2. Then write Python codes according to your approach to solve the question. The codes \
need to be concise and easy to understand, and if necessary, add comments for clarification.
3. Note that your analysis must be based entirely on the Table data, with special \
attention to the content and format of the table cells.

You should deliberately go through the user's Question, Table_path and Table and strictly \
follow the guidelines to appropriately answer the user's Question. You can only output a \
standardized JSON object, including "code_thought" and "code", and you are prohibited from \
outputting any other unnecessary thought processes. Ensure that your Response can be read \
by json.loads().

### Guidelines:
**Thought generation**: With the goal of addressing the user's Question, refer to \
table_data to generate step-by-step code writing ideas.

**File Reading**: Depending on the table file format and size, efficiently read data from \
the given `Table_path` (supporting formats such as CSV, Parquet) and load it into a Pandas \
DataFrame. For larger datasets, choose an appropriate method to ensure performance.

**String Matching**:
- When performing string matching, it is best to use the `.contains()` method instead of a \
completely strict equal match (`==`). When using the `.contains()` function, set \
`regex=False`. Usage Example: filtered_df = df[df['Publication'].str.contains(\
'Harpercollins Publishers (India)', case=False, na=False, regex=False)]

**Sorting and Ranking**:
- If the query involves rankings, top/bottom N, max/min, higher/lower than, etc, please \
sort the data using `sort_values()`. If one or more columns of data to be sorted may have \
the same value, they should be sorted twice in index order.
- Ensure that the DataFrame is sorted by index even if the values are the same.
- When sorting string type numbers, first convert the data type of the numbers from string \
to float.
- Use the unique operation with caution when sorting and ranking.

**Special reminders**:
- The generated code should be robust, including error handling and file format \
compatibility. It should strictly match the column names mentioned in the user's Question, \
avoiding irrelevant or mismatched columns.
- Unless otherwise specified, please ignore null or empty values.
- Pay attention to the wording of the question to determine if uniqueness is required or \
if repeated values are allowed. Unless otherwise specified, the unique operation \
(`.unique()`) is not necessary when sorting or finding the maximum/top/highest/most/\
lowest/smallest/last (etc) N values in most cases.
- Pay attention to **the format of example values** before you manipulate the data in a \
certain column. Deeply think about how to correctly parse and extract ill-formed data, \
not JUST anomaly capture.
- For Boolean problems, it is not necessary to output all elements, only obtain True or \
False answers, or obtain the first few elements to avoid too much unnecessary output.
- The results of mathematical operations must be specific number values, and Scientific \
notation cannot be used.

### Code Instruction:
- Ensure the final answer is printed by the last line in the python code.
- Note that "Answer" is just a placeholder in the code. You should replace it with an \
entity name or a specific description derived from the user's input, as short as possible.

### Response Format:
**User's Question**: Which label has the highest number of products?
Response:
{{
    "code_thought": "To find the single label with the highest number of associated products, we'll: 1. Parse the <labels_en> column to extract individual labels; 2. Handle empty lists and string formatting issues; 3. Count occurrences of each label; 4. Identify the label with the highest count.",
    "code": "import pandas as pd\\ndef parse_labels(s):\\n    if s == '[]':\\n        return []\\n    return [label.strip() for label in s.strip('[]').split(',')]\\ndf = pd.read_csv('all.csv')\\n# Explode the labels into individual rows\\nlabels = df['labels_en'].apply(parse_labels).explode()\\n# Count occurrences of each label\\nlabel_counts = labels.value_counts()\\n# Find the label with the highest number\\nmost_common_label = label_counts.idxmax()\\nprint('the label with the highest number of products', most_common_label)"
}}

### Let's begin!
Now please deliberately go through the following user's Question, Table_path and Table \
word by word and strictly follow the above guidelines to appropriately answer the \
question. You can only output a standardized JSON object, including "code_thought" and \
"code", and you are prohibited from responding with any prefix words or explanations. \
Ensure that your Response can be read by json.loads().

**User's Question**: {question}
**Table File Path**: {table_path}
**Table**:
\"\"\"
{table_data}
\"\"\"
Response: \
"""


ENTITY_TEMPLATE = """\
As a careful data analysis assistant, decide whether the user's question mentions any \
concrete entities (names, titles, places, products, labels, and so on) whose exact \
spelling may differ from how they are stored in the table. For each entity, suggest which \
columns of the table are most likely to contain it as a cell value.

Rules:
- Only extract entities that would appear as cell values, not column names, numbers, \
dates, or aggregation words.
- Suggested columns must come from the `column_list` field of the table schema.
- If the question mentions no such entity, return an empty list.

Respond with JSON only, in this format:
{{"entities": [{{"entity": "<text as written in the question>", "columns": ["<column>", ...]}}]}}

### Table Schema
{table_schema}

### Question
{query}

Response: \
"""


ALIGN_TEMPLATE = """\
An entity mentioned in a user's question must be matched to the exact cell value used in \
the table. Below are candidate cell values retrieved per column. Select the single \
candidate that refers to the same real-world entity as the mention, or decline if none of \
them does.

Rules:
- The value you select must be copied verbatim from the candidate list.
- If no candidate refers to the mentioned entity, respond with nulls.

Respond with JSON only, in this format:
{{"column": "<column name or null>", "value": "<candidate value or null>"}}

### Entity mention
{entity}

### Candidates
{candidates}

### Question
{query}

Response: \
"""


def render_history(records) -> str:
    """Render cycle records into the textual thinking log fed back to models.

    ``records`` is a sequence of objects with round/query_text/thought/
    action_code/observation attributes (see the loop module).
    """
    if not records:
        return "(no records yet)"
    blocks = []
    for rec in records:
        obs = rec.observation
        obs_lines = [f"status: {obs.status}"]
        if obs.stdout.strip():
            obs_lines.append(f"stdout:\n{obs.stdout.rstrip()}")
        if obs.stderr.strip():
            obs_lines.append(f"stderr:\n{obs.stderr.rstrip()}")
        blocks.append(
            f"--- Round {rec.round} ---\n"
            f"Query: {rec.query_text}\n"
            f"Thought: {rec.thought or '(none)'}\n"
            f"Action:\n{rec.action_code or '(no code)'}\n"
            f"Observation: " + "\n".join(obs_lines)
        )
    return "\n".join(blocks)
