from qtree.cli import main

main()
