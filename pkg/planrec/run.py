import sys
import time
from typing import Any, List

from planrec.agent import Agent
from planrec.discourse import read_transcript
from planrec.helpers import bundled_path, configure_logging

TRANSCRIPTS = ["example1.jsonl", "example2.jsonl"]


def load_agent() -> Any:
    agent = Agent()
    agent.initialize()
    return agent


def evaluate_agent(agent: Any, transcripts: List[str]) -> None:
    for name in transcripts:
        transcript = read_transcript(str(bundled_path("transcripts", name)))
        start_time = time.time()
        try:
            _, result = agent.process(transcript)
            total_time = time.time() - start_time
            best = result.ranked[0].interpretation.describe() if result.ranked else "(none)"
            print(f"{name}: {best}")
            print(f"Time taken: {total_time} seconds")
        except Exception as e:
            print(f"{name}: {e}")


def main():
    configure_logging()
    agent = load_agent()
    evaluate_agent(agent, sys.argv[1:] or TRANSCRIPTS)


if __name__ == "__main__":
    main()
