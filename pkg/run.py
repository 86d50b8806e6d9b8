"""
answercheck launcher - run any CLI subcommand from the repository root.

    python run.py check "2^x" "e^(x*log(2))"
    python run.py table1
"""
from answercheck.cli import main

if __name__ == "__main__":
    main()
