"""The two teacher prompts: query generation and 20-title recommendation."""

from __future__ import annotations

import re

from .errors import EmptyConversation, WrongCardinality

N_SAMPLE_QUERIES = 5
N_REVIEWS = 3

QUERY_PROMPT = (
    "You will be given multiple product reviews. Your task is to convert the sentiment, "
    "issues, or features mentioned in these reviews into one distinct query or question. "
    "I want you to style it similar to the following queries:\n"
    "**Sample Queries:** {sample_queries_text}\n"
    "Now, convert the following product reviews into one distinct query with a similar style:\n"
    '**Input Review:** "{product_reviews_text}"'
)

RECOMMENDATION_PROMPT = (
    "Pretend you are a movie recommender system. I will give you a conversation between a "
    "user and you (a recommender system). Based on the conversation, you reply with 20 "
    "recommendations without extra sentences.\n"
    "Here is the conversation: {conv}"
)

RECOMMENDATION_PREFIX = RECOMMENDATION_PROMPT.split("{", 1)[0]

_PLACEHOLDER = re.compile(r"\{(sample_queries_text|product_reviews_text|conv)\}")


def _fill(template: str, values: dict) -> str:
    # single pass: substituted text is never rescanned for placeholders
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def render_query_prompt(sample_queries, product_reviews) -> str:
    sample_queries = list(sample_queries)
    product_reviews = list(product_reviews)
    if len(sample_queries) != N_SAMPLE_QUERIES:
        raise WrongCardinality("sample queries", len(sample_queries), N_SAMPLE_QUERIES)
    if len(product_reviews) != N_REVIEWS:
        raise WrongCardinality("reviews", len(product_reviews), N_REVIEWS)
    return _fill(
        QUERY_PROMPT,
        {
            "sample_queries_text": "\n".join(sample_queries),
            "product_reviews_text": "\n".join(product_reviews),
        },
    )


def render_recommendation_prompt(conv: str) -> str:
    if not conv or not conv.strip():
        raise EmptyConversation()
    return _fill(RECOMMENDATION_PROMPT, {"conv": conv})
